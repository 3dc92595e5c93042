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

#ifndef NRTO_LINEARIZE_HPP
#define NRTO_LINEARIZE_HPP

#include "nrto/core.hpp"
#include "nrto/dynamics.hpp"

#include <string>
#include <vector>

namespace nrto {

/// delta_x = f_u * delta_u + f_zeta * zeta around a nominal trajectory.
struct Sensitivities {
  Mat f_u;     // (T+1) n_x  x  T n_u
  Mat f_zeta;  // (T+1) n_x  x  (T+1) n_x
};

Sensitivities build_sensitivities(const DynamicsModel& model, const StackedTrajectory& nominal, double dt);

/// One scalar constraint c(x, u) <= 0, linearized at the nominal.
///
/// State rows carry grad_x (zero grad_u); control rows carry grad_u (zero
/// grad_x). The linear control sensitivity of the row is
/// f_u' grad_x + grad_u.
struct ConstraintRow {
  std::string label;
  double value = 0.0;
  Vec grad_x;  // (T+1) n_x
  Vec grad_u;  // T n_u
};

/// Rows in a fixed order: control bounds, state bounds, obstacles, goal box.
/// Obstacles use the signed-distance form r + margin - |pos - c| (concave).
std::vector<ConstraintRow> linearize_constraints(const ScenarioSpec& spec, const DynamicsModel& model,
                                                 const StackedTrajectory& nominal);

/// Nonlinear values of the same rows (same order) on an arbitrary trajectory.
Vec evaluate_constraints(const ScenarioSpec& spec, const DynamicsModel& model, const StackedTrajectory& traj);

/// Matrix-free form of the per-constraint maps A_hat_j = W_head * Abar_j,
/// where Abar_j kv stacks K_k' b_{j,k} over time and W_head holds the first
/// T n_x columns of sqrt(tau) Psi Gamma'.
class GainOperator {
 public:
  GainOperator() = default;
  GainOperator(Mat w_head, Mat b_ctrl, int n_u, int n_x);

  int nz() const { return static_cast<int>(w_head_.rows()); }
  int nkv() const { return static_cast<int>(b_ctrl_.rows()) * n_x_; }
  int count() const { return static_cast<int>(b_ctrl_.cols()); }

  /// Column j is A_hat_j * kv (n_z x n_g).
  Mat apply(const Vec& kv) const;
  /// sum_j A_hat_j' * y.col(j).
  Vec apply_transpose(const Mat& y) const;
  /// sum_j A_hat_j' A_hat_j, dense.
  Mat gram() const;
  Vec gram_diagonal() const;
  /// Dense A_hat_j; test use only.
  Mat dense(int j) const;
  /// Appends scale * A_hat_j as sparse triplets at (row0, col0), skipping zeros.
  void append_triplets(int j, Eigen::Index row0, Eigen::Index col0, double scale,
                       std::vector<Eigen::Triplet<double>>& out) const;

  const Mat& w_head() const { return w_head_; }
  const Mat& b_ctrl() const { return b_ctrl_; }

 private:
  Mat w_head_;
  Mat b_ctrl_;
  int n_u_ = 0;
  int n_x_ = 0;
};

/// Psi with Psi' Psi = S^{-1}, obtained as the inverse of the lower Cholesky
/// factor of S (S^{-1} is never formed).
Mat psi_from_metric(const Mat& s_metric);

struct SocpData {
  GainOperator a_hat;
  Mat b_hat;   // n_z x n_g
  Mat b_ctrl;  // T n_u x n_g
  Mat psi;
};

SocpData build_socp_data(const ScenarioSpec& spec, const Sensitivities& sens, const std::vector<ConstraintRow>& rows);

struct CostData {
  SpMat q_v;  // 2 blkdiag(I_{n_x} kron R_K' R_K)
  SpMat r_u;  // blkdiag of the symmetric parts of R_u
};

CostData build_cost(const ScenarioSpec& spec);

/// All constants of one outer iteration.
struct LinearizedSubproblem {
  int horizon = 0;
  int n_x = 0;
  int n_u = 0;
  int n_z = 0;

  Vec u_hat;
  Sensitivities sens;
  CostData cost;

  Vec g_value;  // n_g
  Mat grad_x;   // (T+1) n_x x n_g
  Mat grad_u;   // T n_u x n_g
  Mat b_ctrl;   // T n_u x n_g
  GainOperator a_hat;
  Mat b_hat;  // n_z x n_g
  Mat psi;
  double r_trust = 0.0;
  std::vector<std::string> labels;

  int n_g() const { return static_cast<int>(g_value.size()); }
  int n_du() const { return horizon * n_u; }
  int n_kv() const { return horizon * n_u * n_x; }

  /// Q_uhat(delta_u) = sum_k (u_hat_k + du_k)' R_u (u_hat_k + du_k).
  double control_cost(const Vec& delta_u) const;
  /// 0.5 kv' Q_v kv.
  double gain_cost(const Vec& kv) const;
  /// |A_hat_j kv + b_hat_j| for every j.
  Vec robust_margins(const Vec& kv) const;
  /// g_j + b_j' du + |A_hat_j kv + b_hat_j|: the linearized robust constraint values.
  Vec robust_values(const Vec& delta_u, const Vec& kv) const;
};

LinearizedSubproblem build_subproblem(const ScenarioSpec& spec, const DynamicsModel& model,
                                      const StackedTrajectory& nominal, double r_trust);

}  // namespace nrto

#endif  // NRTO_LINEARIZE_HPP
