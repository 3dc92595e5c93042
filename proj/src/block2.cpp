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

#include "nrto/block2.hpp"

namespace nrto {

ConicQP block2_standard_form(const LinearizedSubproblem& sub, double rho, double slack_weight, const Vec& p_tilde,
                             const Vec& lambda_scaled) {
  const int ndu = sub.n_du(), ng = sub.n_g();
  const int nx = sub.n_x, T = sub.horizon;
  if (p_tilde.size() != ng || lambda_scaled.size() != ng) throw DimensionError("block2: p_tilde/lambda need n_g entries");
  if (!(slack_weight >= 0.0)) throw SolverError("block2: slack weight must be non-negative");
  const int nv = slack_weight > 0.0 ? ng : 0;
  const int n = ndu + ng + nv;

  ConicQP qp;
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < sub.cost.r_u.outerSize(); ++c)
    for (SpMat::InnerIterator it(sub.cost.r_u, c); it; ++it) trip.emplace_back(it.row(), it.col(), 2.0 * it.value());
  for (int j = 0; j < ng; ++j) trip.emplace_back(ndu + j, ndu + j, rho);
  qp.p.resize(n, n);
  qp.p.setFromTriplets(trip.begin(), trip.end());

  qp.q = Vec::Zero(n);
  qp.q.head(ndu) = 2.0 * (sub.cost.r_u * sub.u_hat);
  qp.q.segment(ndu, ng) = rho * (lambda_scaled - p_tilde);
  qp.q.tail(nv).setConstant(slack_weight);

  // Rows: n_g linearized inequalities, n_v slack signs (both nonneg), then
  // the trust-region cone (r, F_u du). The first state block of F_u is
  // identically zero.
  const int trust_rows = T * nx;
  const int lin_rows = ng + nv;
  trip.clear();
  for (int j = 0; j < ng; ++j) {
    for (int i = 0; i < ndu; ++i)
      if (sub.b_ctrl(i, j) != 0.0) trip.emplace_back(j, i, sub.b_ctrl(i, j));
    trip.emplace_back(j, ndu + j, 1.0);
  }
  for (int j = 0; j < nv; ++j) {
    trip.emplace_back(j, ndu + ng + j, -1.0);
    trip.emplace_back(ng + j, ndu + ng + j, -1.0);
  }
  for (int r = 0; r < trust_rows; ++r)
    for (int i = 0; i < ndu; ++i) {
      const double v = sub.sens.f_u(nx + r, i);
      if (v != 0.0) trip.emplace_back(lin_rows + 1 + r, i, -v);
    }
  qp.a.resize(lin_rows + 1 + trust_rows, n);
  qp.a.setFromTriplets(trip.begin(), trip.end());

  qp.b = Vec::Zero(lin_rows + 1 + trust_rows);
  qp.b.head(ng) = -sub.g_value;
  qp.b(lin_rows) = sub.r_trust;
  if (lin_rows > 0) qp.cones.push_back(ConeSpec::nonneg(lin_rows));
  qp.cones.push_back(ConeSpec::soc(1 + trust_rows));
  return qp;
}

Block2Solver::Block2Solver(const LinearizedSubproblem& sub, double rho, double slack_weight,
                           const DrSettings& settings)
    : n_du_(sub.n_du()),
      n_g_(sub.n_g()),
      rho_(rho),
      slack_weight_(slack_weight),
      linear_u_(2.0 * (sub.cost.r_u * sub.u_hat)),
      dr_(block2_standard_form(sub, rho, slack_weight, Vec::Zero(sub.n_g()), Vec::Zero(sub.n_g())), settings) {}

Block2Result Block2Solver::solve(const Vec& p_tilde, const Vec& lambda_scaled) {
  if (p_tilde.size() != n_g_ || lambda_scaled.size() != n_g_) throw DimensionError("block2: p_tilde/lambda need n_g entries");
  const int nv = slack_weight_ > 0.0 ? n_g_ : 0;
  Vec q(n_du_ + n_g_ + nv);
  q.head(n_du_) = linear_u_;
  q.segment(n_du_, n_g_) = rho_ * (lambda_scaled - p_tilde);
  q.tail(nv).setConstant(slack_weight_);
  dr_.update_q(q);
  const DrResult r = dr_.solve();
  return {r.chi.head(n_du_), r.chi.segment(n_du_, n_g_), r.chi.tail(nv), r.status, r.iterations};
}

}  // namespace nrto
