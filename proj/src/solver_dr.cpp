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

#include "nrto/solver_dr.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace nrto {

namespace {
std::atomic<long> g_factorizations{0};
}

std::string to_string(DrStatus status) { return status == DrStatus::converged ? "converged" : "max_iters"; }

void ConicQP::check() const {
  if (p.rows() != n() || p.cols() != n()) throw DimensionError("ConicQP: P must be n x n");
  if (a.rows() != m() || a.cols() != n()) throw DimensionError("ConicQP: A must be m x n");
  check_cones(cones);
  if (total_dim(cones) != m()) throw DimensionError("ConicQP: cone dims must sum to the row count of A");
}

double ConicQP::objective(const Vec& chi) const { return 0.5 * chi.dot(p * chi) + q.dot(chi); }

void KktFactor::factor(const SpMat& p, const SpMat& a, double sigma, double r_s, int dense_threshold) {
  if (!(sigma > 0.0) || !(r_s > 0.0)) throw SolverError("KKT scalings must be positive");
  const Eigen::Index n = p.rows(), m = a.rows();
  dim_ = static_cast<int>(n + m);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(p.nonZeros() + 2 * a.nonZeros() + n + m));
  for (int c = 0; c < p.outerSize(); ++c)
    for (SpMat::InnerIterator it(p, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, sigma);
  for (int c = 0; c < a.outerSize(); ++c)
    for (SpMat::InnerIterator it(a, c); it; ++it) {
      trip.emplace_back(n + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), n + it.row(), it.value());
    }
  for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, -1.0 / r_s);
  SpMat kkt(dim_, dim_);
  kkt.setFromTriplets(trip.begin(), trip.end());

  dense_ = dim_ < dense_threshold;
  if (dense_) {
    dense_ldlt_.compute(Mat(kkt));
    if (dense_ldlt_.info() != Eigen::Success) throw SolverError("KKT factorization failed (dense LDL')");
  } else {
    sparse_.compute(kkt);
    if (sparse_.info() != Eigen::Success) throw SolverError("KKT factorization failed (sparse LDL')");
  }
  ready_ = true;
  ++g_factorizations;
}

Vec KktFactor::solve(const Vec& rhs) const {
  if (!ready_) throw SolverError("KktFactor::solve called before factor");
  return dense_ ? Vec(dense_ldlt_.solve(rhs)) : Vec(sparse_.solve(rhs));
}

long KktFactor::total_factorizations() { return g_factorizations.load(); }

namespace {

// Max-abs of every column of a column-major sparse matrix.
Vec col_inf_norms(const SpMat& mat) {
  Vec out = Vec::Zero(mat.cols());
  for (int c = 0; c < mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(mat, c); it; ++it) out(c) = std::max(out(c), std::abs(it.value()));
  return out;
}

Vec row_inf_norms(const SpMat& mat) {
  Vec out = Vec::Zero(mat.rows());
  for (int c = 0; c < mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(mat, c); it; ++it) out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
  return out;
}

double clamp_scale(double norm) {
  constexpr double lo = 1e-4, hi = 1e4;
  return norm < lo ? 1.0 : 1.0 / std::sqrt(std::min(norm, hi));
}

}  // namespace

Scaling ruiz_scaling(const ConicQP& qp, int iters) {
  Scaling sc;
  sc.d = Vec::Ones(qp.n());
  sc.e = Vec::Ones(qp.m());
  SpMat p = qp.p, a = qp.a;
  for (int it = 0; it < iters; ++it) {
    const Vec pc = col_inf_norms(p), ac = col_inf_norms(a);
    Vec dd(qp.n());
    for (int i = 0; i < qp.n(); ++i) dd(i) = clamp_scale(std::max(pc(i), ac(i)));
    Vec ar = row_inf_norms(a);
    Vec de(qp.m());
    Eigen::Index off = 0;
    for (const auto& cone : qp.cones) {
      if (cone.kind == ConeKind::soc) {
        de.segment(off, cone.dim).setConstant(clamp_scale(ar.segment(off, cone.dim).maxCoeff()));
      } else {
        for (Eigen::Index r = off; r < off + cone.dim; ++r) de(r) = clamp_scale(ar(r));
      }
      off += cone.dim;
    }
    p = dd.asDiagonal() * p * dd.asDiagonal();
    a = de.asDiagonal() * a * dd.asDiagonal();
    sc.d.array() *= dd.array();
    sc.e.array() *= de.array();
  }
  // Cost scaling from P only: q changes between solves.
  const Vec pc = col_inf_norms(p);
  const double mean = qp.n() ? pc.mean() : 0.0;
  sc.c = iters > 0 && mean > 1e-4 ? 1.0 / std::min(mean, 1e4) : 1.0;
  return sc;
}

DrSolver::DrSolver(ConicQP qp, DrSettings settings) : qp_(std::move(qp)), settings_(settings) {
  qp_.check();
  if (!(settings_.alpha > 0.0 && settings_.alpha < 1.0)) throw SolverError("DR relaxation alpha must lie in (0, 1)");
  if (settings_.scaling_iters < 0) throw SolverError("DR scaling_iters must be non-negative");
  scale_ = ruiz_scaling(qp_, settings_.scaling_iters);
  scaled_.p = scale_.d.asDiagonal() * qp_.p * scale_.d.asDiagonal();
  scaled_.p *= scale_.c;
  scaled_.a = scale_.e.asDiagonal() * qp_.a * scale_.d.asDiagonal();
  scaled_.q = scale_.c * scale_.d.cwiseProduct(qp_.q);
  scaled_.b = scale_.e.cwiseProduct(qp_.b);
  scaled_.cones = qp_.cones;
  kkt_.factor(scaled_.p, scaled_.a, settings_.sigma, settings_.r_s, settings_.dense_threshold);
  ++factorizations_;
  reset_state();
}

void DrSolver::update_q(const Vec& q) {
  if (q.size() != qp_.n()) throw DimensionError("DrSolver::update_q: wrong length");
  qp_.q = q;
  scaled_.q = scale_.c * scale_.d.cwiseProduct(q);
}

void DrSolver::update_b(const Vec& b) {
  if (b.size() != qp_.m()) throw DimensionError("DrSolver::update_b: wrong length");
  qp_.b = b;
  scaled_.b = scale_.e.cwiseProduct(b);
}

void DrSolver::reset_state() {
  state_.chi_tilde = Vec::Zero(qp_.n());
  state_.s_tilde = Vec::Zero(qp_.m());
}

DrSolver::Prox DrSolver::prox_affine(const DrState& st) const {
  const int n = qp_.n(), m = qp_.m();
  Vec rhs(n + m);
  rhs.head(n) = settings_.sigma * st.chi_tilde - scaled_.q;
  rhs.tail(m) = scaled_.b - st.s_tilde;
  const Vec sol = kkt_.solve(rhs);
  Prox out;
  out.chi = sol.head(n);
  out.y = sol.tail(m);
  out.s = st.s_tilde - out.y / settings_.r_s;
  return out;
}

double DrSolver::step(DrState& st, DrResult* out) const {
  const Prox px = prox_affine(st);
  if (!px.chi.allFinite() || !px.s.allFinite()) throw SolverError("DR iterates diverged (non-finite values)");
  const double alpha = settings_.alpha;

  // chi_ref - chi = chi - chi_tilde since the cone prox leaves chi untouched.
  st.chi_tilde += alpha * (px.chi - st.chi_tilde);
  Vec s_ref = 2.0 * px.s - st.s_tilde;
  Vec s_proj = s_ref;
  const auto t0 = std::chrono::steady_clock::now();
  project_product_inplace(s_proj, qp_.cones);
  const double t_proj = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Vec ds = alpha * (s_proj - px.s);
  st.s_tilde += ds;

  if (out) {
    out->chi = scale_.d.cwiseProduct(px.chi);
    // Moreau: s_proj - s_ref lies in K* and is orthogonal to s_proj. Both
    // survive the block-constant unscaling.
    out->y = (settings_.r_s / scale_.c) * scale_.e.cwiseProduct(s_proj - s_ref);
    out->s = s_proj.cwiseQuotient(scale_.e);
    out->projection_seconds += t_proj;
  }
  return ds.norm();
}

DrResult DrSolver::solve() {
  if (!settings_.warm_start) reset_state();
  DrResult res;
  for (int it = 1; it <= settings_.max_iters; ++it) {
    res.residual = step(state_, &res);
    res.iterations = it;
    if (trace_) trace_->push_back({it, res.residual, qp_.objective(res.chi)});
    if (res.residual <= settings_.eps) {
      res.status = DrStatus::converged;
      return res;
    }
  }
  res.status = DrStatus::max_iters;
  return res;
}

DrResult solve_dr(const ConicQP& qp, const DrSettings& settings, DrState* warm) {
  DrSolver solver(qp, settings);
  if (warm && warm->chi_tilde.size() == qp.n() && warm->s_tilde.size() == qp.m()) solver.state() = *warm;
  DrResult res = solver.solve();
  if (warm) *warm = solver.state();
  return res;
}

KktCertificate conic_kkt_certificate(const ConicQP& qp, const Vec& chi, const Vec& s, const Vec& y) {
  KktCertificate c;
  c.primal = (qp.a * chi + s - qp.b).norm() / (1.0 + qp.b.norm());
  c.dual = (qp.p * chi + qp.q + qp.a.transpose() * y).norm() / (1.0 + qp.q.norm());
  // Both cone families used here are self-dual.
  c.cone_s = cone_violation(s, qp.cones);
  c.cone_y = cone_violation(y, qp.cones);
  c.complementarity = std::abs(s.dot(y)) / (1.0 + s.norm() * y.norm());
  return c;
}

Vec block1_linear_term(const LinearizedSubproblem& sub, double rho, const Vec& p_prev, const Vec& lambda_prev) {
  const int nkv = sub.n_kv(), ng = sub.n_g();
  if (p_prev.size() != ng || lambda_prev.size() != ng) throw DimensionError("block1: p and lambda need n_g entries");
  Vec q = Vec::Zero(nkv + ng);
  q.tail(ng) = -rho * (p_prev + lambda_prev / rho);
  return q;
}

ConicQP to_standard_form(const LinearizedSubproblem& sub, double rho, const Vec& p_prev, const Vec& lambda_prev) {
  const int nkv = sub.n_kv(), ng = sub.n_g(), nz = sub.n_z;
  const int block = 1 + nz;

  ConicQP qp;
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < sub.cost.q_v.outerSize(); ++c)
    for (SpMat::InnerIterator it(sub.cost.q_v, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < ng; ++j) trip.emplace_back(nkv + j, nkv + j, rho);
  qp.p.resize(nkv + ng, nkv + ng);
  qp.p.setFromTriplets(trip.begin(), trip.end());

  qp.q = block1_linear_term(sub, rho, p_prev, lambda_prev);

  trip.clear();
  qp.b = Vec::Zero(static_cast<Eigen::Index>(ng) * block);
  for (int j = 0; j < ng; ++j) {
    const Eigen::Index row0 = static_cast<Eigen::Index>(j) * block;
    trip.emplace_back(row0, nkv + j, -1.0);
    sub.a_hat.append_triplets(j, row0 + 1, 0, -1.0, trip);
    qp.b.segment(row0 + 1, nz) = sub.b_hat.col(j);
  }
  qp.a.resize(static_cast<Eigen::Index>(ng) * block, nkv + ng);
  qp.a.setFromTriplets(trip.begin(), trip.end());
  qp.cones.assign(static_cast<std::size_t>(ng), ConeSpec::soc(block));
  return qp;
}

void write_trace_csv(std::ostream& os, const std::vector<DrTraceRow>& rows) {
  os << "iteration,residual,objective\n" << std::setprecision(17);
  for (const auto& r : rows) os << r.iteration << ',' << r.residual << ',' << r.objective << '\n';
}

}  // namespace nrto
