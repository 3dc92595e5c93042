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

#include "nrto/solver_fulladmm.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace nrto {

FullAdmmState FullAdmmState::zeros(const LinearizedSubproblem& sub) {
  FullAdmmState st;
  st.k_v = Vec::Zero(sub.n_kv());
  st.nu = Mat::Zero(sub.n_z, sub.n_g());
  st.p = Vec::Zero(sub.n_g());
  st.p_tilde = Vec::Zero(sub.n_g());
  st.lambda_p = Vec::Zero(sub.n_g());
  st.lambda_nu = Mat::Zero(sub.n_z, sub.n_g());
  st.delta_u = Vec::Zero(sub.n_du());
  return st;
}

PrecomputedOperators::PrecomputedOperators(const LinearizedSubproblem& sub, double rho,
                                           const FullAdmmSettings& settings)
    : sub_(&sub), rho_(rho), direct_(sub.n_kv() < settings.direct_threshold), pcg_tol_(settings.pcg_tol),
      pcg_iters_(settings.pcg_iters) {
  if (!(rho > 0.0)) throw SolverError("FullADMM: rho must be positive");
  const int n = sub.n_kv();
  if (direct_) {
    Mat h = Mat(sub.cost.q_v);
    if (sub.n_g() > 0) h += rho * sub.a_hat.gram();
    llt_.compute(h);
    if (llt_.info() != Eigen::Success) throw SolverError("FullADMM: k_v system is not positive definite (check R_K)");
  } else {
    diag_ = Vec(sub.cost.q_v.diagonal());
    if (sub.n_g() > 0) diag_ += rho * sub.a_hat.gram_diagonal();
    if (!(diag_.array() > 0.0).all()) throw SolverError("FullADMM: k_v system is not positive definite (check R_K)");
  }
  q_ = Vec::Zero(n);
  if (sub.n_g() > 0) q_ = -rho * solve_m(sub.a_hat.apply_transpose(sub.b_hat));
  builds_ = 1;
}

Vec PrecomputedOperators::solve_m(const Vec& rhs) const {
  if (direct_) return llt_.solve(rhs);

  // Jacobi-preconditioned CG with matrix-free products.
  const auto& sub = *sub_;
  auto hess = [&](const Vec& v) {
    Vec out = sub.cost.q_v * v;
    if (sub.n_g() > 0) out += rho_ * sub.a_hat.apply_transpose(sub.a_hat.apply(v));
    return out;
  };
  Vec x = Vec::Zero(rhs.size());
  Vec r = rhs;
  const double stop = pcg_tol_ * rhs.norm();
  if (r.norm() <= stop) return x;
  Vec z = r.cwiseQuotient(diag_);
  Vec d = z;
  double rz = r.dot(z);
  for (int it = 0; it < pcg_iters_; ++it) {
    const Vec hd = hess(d);
    const double step = rz / d.dot(hd);
    x += step * d;
    r -= step * hd;
    if (r.norm() <= stop) break;
    z = r.cwiseQuotient(diag_);
    const double rz_next = r.dot(z);
    d = z + (rz_next / rz) * d;
    rz = rz_next;
  }
  return x;
}

Vec PrecomputedOperators::apply_m_cal(const Vec& k) const { return solve_m(sub_->cost.q_v * k); }

Vec PrecomputedOperators::apply_m_bar(const Mat& nu) const {
  if (sub_->n_g() == 0) return Vec::Zero(sub_->n_kv());
  return rho_ * solve_m(sub_->a_hat.apply_transpose(nu));
}

Vec PrecomputedOperators::recursion(const Vec& k_prev, const Mat& nu) const {
  // q + Mcal k + Mbar nu = M (Q_v k + rho sum_j A_hat_j' (nu_j - b_hat_j)).
  Vec rhs = sub_->cost.q_v * k_prev;
  if (sub_->n_g() > 0) rhs += rho_ * sub_->a_hat.apply_transpose(nu - sub_->b_hat);
  return solve_m(rhs);
}

void block1_project(FullAdmmState& st, const LinearizedSubproblem& sub) {
  const int ng = sub.n_g(), nz = sub.n_z;
  if (ng == 0) return;
  // Column j holds (p_j + lambda_p_j, A_hat_j k_v + b_hat_j + lambda_nu_j);
  // column-major storage makes each cone block contiguous.
  Mat batch(1 + nz, ng);
  batch.row(0) = (st.p + st.lambda_p).transpose();
  batch.bottomRows(nz) = sub.a_hat.apply(st.k_v) + sub.b_hat + st.lambda_nu;
  Eigen::Map<Vec> flat(batch.data(), batch.size());
  project_product_inplace(flat, std::vector<ConeSpec>(static_cast<std::size_t>(ng), ConeSpec::soc(1 + nz)));
  st.p_tilde = batch.row(0).transpose();
  st.nu = batch.bottomRows(nz);
}

void block2_kv(FullAdmmState& st, const PrecomputedOperators& ops) { st.k_v = ops.recursion(st.k_v, st.nu); }

void dual_update(FullAdmmState& st, const LinearizedSubproblem& sub) {
  if (sub.n_g() == 0) return;
  st.lambda_p += st.p - st.p_tilde;
  st.lambda_nu += sub.a_hat.apply(st.k_v) + sub.b_hat - st.nu;
}

double stationarity_residual(const FullAdmmState& st, const LinearizedSubproblem& sub, double rho) {
  Vec r = sub.cost.q_v * st.k_v;
  if (sub.n_g() > 0) r += rho * sub.a_hat.apply_transpose(st.lambda_nu);
  return r.norm();
}

FullAdmmResult solve_fulladmm(const LinearizedSubproblem& sub, const FullAdmmSettings& settings,
                              const FullAdmmObserver& observer) {
  const PrecomputedOperators ops(sub, settings.rho, settings);
  Block2Solver block2(sub, settings.rho, settings.slack_weight, settings.block2);

  FullAdmmResult res;
  res.state = FullAdmmState::zeros(sub);
  auto& st = res.state;
  for (int l = 1; l <= settings.max_iters; ++l) {
    const Vec p_tilde_prev = st.p_tilde;
    const auto t0 = std::chrono::steady_clock::now();
    block1_project(st, sub);
    res.projection_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Block2Result b2 = block2.solve(st.p_tilde, st.lambda_p);
    st.delta_u = b2.delta_u;
    st.p = b2.p;
    block2_kv(st, ops);
    dual_update(st, sub);
    if (!st.k_v.allFinite() || !st.p.allFinite() || !st.delta_u.allFinite())
      throw SolverError("FullADMM iterates diverged (non-finite values)");

    const double r_p = (st.p - st.p_tilde).norm();
    const double r_d = settings.rho * (st.p_tilde - p_tilde_prev).norm();
    res.r_p.push_back(r_p);
    res.r_d.push_back(r_d);
    res.iterations = l;
    if (observer) observer(l, st);
    if (r_p <= settings.eps_p && r_d <= settings.eps_d) {
      res.status = DrStatus::converged;
      break;
    }
  }
  return res;
}

void write_residual_csv(std::ostream& os, const std::vector<double>& r_p, const std::vector<double>& r_d) {
  os << "iteration,r_p,r_d\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r_p.size(); ++i) os << i + 1 << ',' << r_p[i] << ',' << r_d[i] << '\n';
}

}  // namespace nrto
