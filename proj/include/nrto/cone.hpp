/*
 * Copyright 2026 The NRTO Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NRTO_CONE_HPP
#define NRTO_CONE_HPP

#include "nrto/core.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace nrto {

enum class ConeKind { soc, nonneg };

/// One block of a product cone. A soc block is laid out as (t, eta) with
/// |eta| <= t, so its dim is 1 + len(eta).
struct ConeSpec {
  ConeKind kind = ConeKind::nonneg;
  int dim = 1;

  static ConeSpec soc(int dim) { return {ConeKind::soc, dim}; }
  static ConeSpec nonneg(int dim) { return {ConeKind::nonneg, dim}; }
};

int total_dim(const std::vector<ConeSpec>& cones);
void check_cones(const std::vector<ConeSpec>& cones);

/// In-place projection of a stacked (t, y) block onto the second-order cone.
template <typename Derived>
void project_soc_inplace(Eigen::MatrixBase<Derived> const& block_const) {
  auto& block = const_cast<Eigen::MatrixBase<Derived>&>(block_const);
  using Scalar = typename Derived::Scalar;
  const Scalar t = block(0);
  auto y = block.tail(block.size() - 1);
  const Scalar a = y.norm();
  if (!std::isfinite(t) || !std::isfinite(a)) throw NumericError("project_soc: non-finite input");
  if (a <= t) return;
  if (a <= -t) {
    block.setZero();
    return;
  }
  const Scalar half = (t + a) / Scalar(2);
  y *= half / a;
  block(0) = half;
}

/// Projection of (t, y) onto {(t, y) : |y| <= t}.
template <typename Scalar>
std::pair<Scalar, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> project_soc(
    Scalar t, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> block(y.size() + 1);
  block << t, y;
  project_soc_inplace(block);
  return {block(0), block.tail(y.size())};
}

template <typename Derived>
typename Derived::PlainObject project_nonneg(const Eigen::MatrixBase<Derived>& v) {
  if (!v.allFinite()) throw NumericError("project_nonneg: non-finite input");
  return v.cwiseMax(typename Derived::Scalar(0));
}

/// Blockwise projection; blocks are independent and may run concurrently.
void project_product_inplace(Eigen::Ref<Vec> s, const std::vector<ConeSpec>& cones);
Vec project_product(const Vec& s, const std::vector<ConeSpec>& cones);

/// Distance-style membership measure: 0 inside the cone, positive outside.
double cone_violation(const Vec& s, const std::vector<ConeSpec>& cones);

}  // namespace nrto

#endif  // NRTO_CONE_HPP
