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

#ifndef NRTO_SOLVER_FULLADMM_HPP
#define NRTO_SOLVER_FULLADMM_HPP

#include "nrto/block2.hpp"
#include "nrto/linearize.hpp"
#include "nrto/solver_dr.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace nrto {

struct FullAdmmSettings {
  double rho = 10.0;  // shared by the p and nu couplings
  int max_iters = 40;
  double eps_p = 1e-3;
  double eps_d = 1e-3;
  int direct_threshold = 2000;  // Cholesky for the k_v system below this size
  double pcg_tol = 0.05;
  int pcg_iters = 100;
  double slack_weight = 0.0;  // l1 weight on the linear-row slack of block 2, 0 = hard rows
  DrSettings block2;
};

/// nu and lambda_nu are stored column-wise (n_z x n_g), one column per constraint.
struct FullAdmmState {
  Vec k_v;
  Mat nu;
  Vec p;
  Vec p_tilde;
  Vec lambda_p;
  Mat lambda_nu;
  Vec delta_u;

  static FullAdmmState zeros(const LinearizedSubproblem& sub);
};

/// M = (Q_v + rho sum_j A_hat_j' A_hat_j)^{-1} realized as a solver, plus the
/// affine recursion k_v <- q + Mcal k_v + Mbar nu.
class PrecomputedOperators {
 public:
  PrecomputedOperators(const LinearizedSubproblem& sub, double rho, const FullAdmmSettings& settings);

  Vec solve_m(const Vec& rhs) const;
  const Vec& q() const { return q_; }
  /// Mcal k = M Q_v k.
  Vec apply_m_cal(const Vec& k) const;
  /// Mbar nu = rho M sum_j A_hat_j' nu_j.
  Vec apply_m_bar(const Mat& nu) const;
  /// q + Mcal k + Mbar nu with a single M-solve.
  Vec recursion(const Vec& k_prev, const Mat& nu) const;

  bool direct() const { return direct_; }
  /// Number of times the operators were built (instrumentation; stays 1).
  int builds() const { return builds_; }

 private:
  const LinearizedSubproblem* sub_;
  double rho_;
  bool direct_;
  double pcg_tol_;
  int pcg_iters_;
  Eigen::LLT<Mat> llt_;
  Vec diag_;  // Jacobi preconditioner for the iterative path
  Vec q_;
  int builds_ = 0;
};

/// Per-iteration hook: (iteration, state after the dual update).
using FullAdmmObserver = std::function<void(int, const FullAdmmState&)>;

struct FullAdmmResult {
  FullAdmmState state;
  int iterations = 0;
  DrStatus status = DrStatus::max_iters;
  std::vector<double> r_p;
  std::vector<double> r_d;
  double projection_seconds = 0.0;  // Block-1 affine pass and projections
};

void block1_project(FullAdmmState& st, const LinearizedSubproblem& sub);
void block2_kv(FullAdmmState& st, const PrecomputedOperators& ops);
void dual_update(FullAdmmState& st, const LinearizedSubproblem& sub);

/// |sum_j rho A_hat_j' lambda_nu_j + Q_v k_v|, the quantity the closed-form
/// k_v recursion keeps at zero.
double stationarity_residual(const FullAdmmState& st, const LinearizedSubproblem& sub, double rho);

FullAdmmResult solve_fulladmm(const LinearizedSubproblem& sub, const FullAdmmSettings& settings,
                              const FullAdmmObserver& observer = {});

void write_residual_csv(std::ostream& os, const std::vector<double>& r_p, const std::vector<double>& r_d);

}  // namespace nrto

#endif  // NRTO_SOLVER_FULLADMM_HPP
