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

#ifndef NRTO_BLOCK2_HPP
#define NRTO_BLOCK2_HPP

#include "nrto/linearize.hpp"
#include "nrto/solver_dr.hpp"

namespace nrto {

struct Block2Result {
  Vec delta_u;
  Vec p;
  Vec slack;  // v, empty for hard rows
  DrStatus status = DrStatus::max_iters;
  int iterations = 0;
};

/// The (delta_u, p) update shared by both inner engines:
///
///   min  Q_uhat(du) + w sum_j v_j + rho/2 |p - p_tilde + lambda|^2
///   s.t. g_j + b_j' du + p_j <= v_j,  v >= 0,  |F_u du| <= r_trust
///
/// with lambda in scaled form. The l1 slack v keeps the block feasible when
/// the linearization is not; w = 0 drops v and makes the rows hard. P and A
/// stay fixed for one subproblem, so the KKT factorization happens once and
/// every call only swaps q.
class Block2Solver {
 public:
  Block2Solver(const LinearizedSubproblem& sub, double rho, double slack_weight, const DrSettings& settings);

  Block2Result solve(const Vec& p_tilde, const Vec& lambda_scaled);

  const DrSolver& engine() const { return dr_; }
  DrSolver& engine() { return dr_; }

 private:
  int n_du_ = 0;
  int n_g_ = 0;
  double rho_ = 0.0;
  double slack_weight_ = 0.0;
  Vec linear_u_;  // 2 R_u u_hat
  DrSolver dr_;
};

/// Standard-form data of the block for a given (p_tilde, lambda).
/// chi = [du; p; v] (v only when slack_weight > 0).
ConicQP block2_standard_form(const LinearizedSubproblem& sub, double rho, double slack_weight, const Vec& p_tilde,
                             const Vec& lambda_scaled);

}  // namespace nrto

#endif  // NRTO_BLOCK2_HPP
