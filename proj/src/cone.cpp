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

#include "nrto/cone.hpp"

#include <algorithm>

namespace nrto {

int total_dim(const std::vector<ConeSpec>& cones) {
  int n = 0;
  for (const auto& c : cones) n += c.dim;
  return n;
}

void check_cones(const std::vector<ConeSpec>& cones) {
  for (const auto& c : cones) {
    if (c.kind == ConeKind::soc && c.dim < 2) throw DimensionError("soc cone block needs dim >= 2");
    if (c.kind == ConeKind::nonneg && c.dim < 1) throw DimensionError("nonneg cone block needs dim >= 1");
  }
}

namespace {

std::vector<Eigen::Index> offsets_of(const std::vector<ConeSpec>& cones) {
  std::vector<Eigen::Index> off(cones.size() + 1, 0);
  for (std::size_t i = 0; i < cones.size(); ++i) off[i + 1] = off[i] + cones[i].dim;
  return off;
}

}  // namespace

void project_product_inplace(Eigen::Ref<Vec> s, const std::vector<ConeSpec>& cones) {
  const auto off = offsets_of(cones);
  if (off.back() != s.size()) throw DimensionError("project_product: cone dims do not sum to the vector length");
  // Check up front so the parallel region never throws.
  if (!s.allFinite()) throw NumericError("project_product: non-finite input");
  const auto nb = static_cast<long>(cones.size());
#pragma omp parallel for schedule(static) if (nb > 256)
  for (long b = 0; b < nb; ++b) {
    const auto& cone = cones[static_cast<std::size_t>(b)];
    auto block = s.segment(off[static_cast<std::size_t>(b)], cone.dim);
    if (cone.kind == ConeKind::nonneg) {
      block = block.cwiseMax(0.0);
    } else {
      project_soc_inplace(block);
    }
  }
}

Vec project_product(const Vec& s, const std::vector<ConeSpec>& cones) {
  Vec out = s;
  project_product_inplace(out, cones);
  return out;
}

double cone_violation(const Vec& s, const std::vector<ConeSpec>& cones) {
  const auto off = offsets_of(cones);
  if (off.back() != s.size()) throw DimensionError("cone_violation: cone dims do not sum to the vector length");
  double worst = 0.0;
  for (std::size_t b = 0; b < cones.size(); ++b) {
    const auto block = s.segment(off[b], cones[b].dim);
    if (cones[b].kind == ConeKind::nonneg)
      worst = std::max(worst, -block.minCoeff());
    else
      worst = std::max(worst, block.tail(block.size() - 1).norm() - block(0));
  }
  return worst;
}

}  // namespace nrto
