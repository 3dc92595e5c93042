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

#include "oracles.hpp"

#include "nrto/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace nrto::testing {

Mat central_difference(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
  const Vec f0 = f(x);
  Mat jac(f0.size(), x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    jac.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp(i) = xm(i) = x(i);
  }
  return jac;
}

double scaled_error(const Mat& value, const Mat& reference) {
  return ((value - reference).array().abs() / (1.0 + reference.array().abs())).maxCoeff();
}

Vec soc_projection_oracle(const Vec& v) {
  const double t = v(0);
  const Vec y0 = v.tail(v.size() - 1);
  const double a = y0.norm();
  // Stationarity for a fixed multiplier mu >= 0: s = t + mu/2 and y is y0
  // shrunk by mu/2. The gap |y| - s is strictly decreasing in mu.
  auto gap = [&](double mu) { return std::max(0.0, a - mu / 2.0) - (t + mu / 2.0); };
  if (gap(0.0) <= 0.0) return v;
  double lo = 0.0, hi = 2.0 * (a + std::abs(t)) + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? lo : hi) = mid;
  }
  const double mu = 0.5 * (lo + hi);
  Vec out(v.size());
  out(0) = t + mu / 2.0;
  out.tail(v.size() - 1) = a > 0.0 ? Vec(y0 * std::max(0.0, 1.0 - mu / (2.0 * a))) : Vec(y0);
  return out;
}

namespace {

// Same cone semantics as the product cone, written out independently.
void project_blocks(Vec& v, const std::vector<ConeSpec>& cones) {
  Eigen::Index off = 0;
  for (const auto& c : cones) {
    if (c.kind == ConeKind::nonneg) {
      v.segment(off, c.dim) = v.segment(off, c.dim).cwiseMax(0.0);
    } else {
      v.segment(off, c.dim) = soc_projection_oracle(v.segment(off, c.dim));
    }
    off += c.dim;
  }
}

}  // namespace

PgResult projected_gradient_oracle(const ConicQP& qp, int max_iters, double tol) {
  const Mat p = Mat(qp.p);
  const Mat a = Mat(qp.a);
  const Eigen::LLT<Mat> llt(p);
  const Mat h = a * llt.solve(a.transpose());  // A P^{-1} A'
  const double lip = Eigen::SelfAdjointEigenSolver<Mat>(h, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(lip, 1e-12);

  auto chi_of = [&](const Vec& y) -> Vec { return -llt.solve(qp.q + a.transpose() * y); };
  Vec y = Vec::Zero(qp.m()), y_prev = y, w = y;
  double theta = 1.0;
  PgResult res;
  for (int it = 1; it <= max_iters; ++it) {
    Vec next = w + step * (a * chi_of(w) - qp.b);
    project_blocks(next, qp.cones);
    const double move = (next - y).norm();
    // Gradient-based restart keeps the momentum from overshooting.
    if ((next - y).dot(y - y_prev) < 0.0) theta = 1.0;
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y_prev = y;
    y = next;
    w = y + ((theta - 1.0) / theta_next) * (y - y_prev);
    theta = theta_next;
    res.iterations = it;
    if (move <= tol * (1.0 + y.norm())) break;
  }
  res.y = y;
  res.chi = chi_of(y);
  res.objective = qp.objective(res.chi);
  return res;
}

ConicQP random_conic_qp(std::mt19937_64& rng, int n, int n_soc, int n_nonneg) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  std::uniform_int_distribution<int> soc_dim(2, 4);
  auto randn = [&](Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
    return m;
  };

  ConicQP qp;
  for (int i = 0; i < n_soc; ++i) qp.cones.push_back(ConeSpec::soc(soc_dim(rng)));
  if (n_nonneg > 0) qp.cones.push_back(ConeSpec::nonneg(n_nonneg));
  const int m = total_dim(qp.cones);

  const Mat mroot = randn(n, n);
  const Mat p = mroot.transpose() * mroot / n + 0.1 * Mat::Identity(n, n);
  const Mat a = randn(m, n);
  const Vec chi0 = randn(n, 1);
  Vec s0(m);
  Eigen::Index off = 0;
  for (const auto& c : qp.cones) {
    if (c.kind == ConeKind::nonneg) {
      for (int i = 0; i < c.dim; ++i) s0(off + i) = unif(rng);
    } else {
      const Vec y = randn(c.dim - 1, 1);
      s0(off) = y.norm() + unif(rng);
      s0.segment(off + 1, c.dim - 1) = y;
    }
    off += c.dim;
  }
  qp.p = p.sparseView();
  qp.a = a.sparseView();
  qp.b = a * chi0 + s0;
  qp.q = 3.0 * randn(n, 1);
  return qp;
}

ProxSolution dense_prox_oracle(const ConicQP& qp, const Vec& chi_tilde, const Vec& s_tilde, double sigma,
                               double r_s) {
  const Mat p = Mat(qp.p);
  const Mat a = Mat(qp.a);
  const Mat lhs = p + sigma * Mat::Identity(qp.n(), qp.n()) + r_s * a.transpose() * a;
  const Vec rhs = sigma * chi_tilde - qp.q + r_s * a.transpose() * (qp.b - s_tilde);
  ProxSolution out;
  out.chi = lhs.ldlt().solve(rhs);
  out.s = qp.b - a * out.chi;
  return out;
}

ScenarioSpec random_unicycle_spec(std::mt19937_64& rng, int horizon, int n_obstacles, double tau) {
  std::uniform_real_distribution<double> cx(1.0, 3.0), cy(1.5, 3.0);
  std::normal_distribution<double> gauss;
  ScenarioSpec spec;
  spec.model = ModelId::unicycle;
  spec.horizon = horizon;
  spec.dt = 0.1;
  spec.x0_bar = Vec::Zero(3);
  for (int i = 0; i < n_obstacles; ++i) spec.obstacles.push_back({(Vec(2) << cx(rng), cy(rng)).finished(), 0.3});
  const auto [lo, hi] = default_control_limits(spec);
  spec.control_min = lo;
  spec.control_max = hi;
  for (int k = 0; k < horizon; ++k) {
    spec.r_u.push_back(0.1 * Mat::Identity(2, 2));
    spec.r_k.push_back(Mat::Identity(2, 2));
  }
  const int dim = (horizon + 1) * 3;
  Mat m(dim, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
  spec.uncertainty.gamma = Mat::Identity(dim, dim);
  spec.uncertainty.s_metric = m * m.transpose() / dim + Mat::Identity(dim, dim);
  spec.uncertainty.tau = tau;
  return spec;
}

StackedTrajectory random_nominal(std::mt19937_64& rng, const ScenarioSpec& spec) {
  const DynamicsModel model = DynamicsModel::from_spec(spec);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec u(spec.horizon * model.nu);
  for (int k = 0; k < spec.horizon; ++k)
    for (int i = 0; i < model.nu; ++i) {
      const double lo = spec.control_min(i), hi = spec.control_max(i);
      u(k * model.nu + i) = lo + (hi - lo) * (0.25 + 0.5 * unif(rng));
    }
  return rollout_nominal(model, u, spec.x0_bar, spec.dt);
}

Mat gain_block_matrix(const std::vector<Mat>& gains, int n_x) {
  const auto T = static_cast<Eigen::Index>(gains.size());
  const Eigen::Index nu = T ? gains.front().rows() : 0;
  Mat out = Mat::Zero(T * nu, (T + 1) * n_x);
  for (Eigen::Index k = 0; k < T; ++k) out.block(k * nu, k * n_x, nu, n_x) = gains[static_cast<std::size_t>(k)];
  return out;
}

LinearizedSubproblem hand_subproblem(int n_u, int n_x, const Mat& b_ctrl, const Mat& b_hat, const Vec& g_value,
                                     double r_trust) {
  LinearizedSubproblem sub;
  sub.horizon = 1;
  sub.n_u = n_u;
  sub.n_x = n_x;
  sub.n_z = n_x;
  sub.u_hat = Vec::Zero(n_u);
  sub.sens.f_u = Mat::Zero(2 * n_x, n_u);
  sub.sens.f_u.bottomRows(n_x) = Mat::Identity(n_x, n_u);
  sub.sens.f_zeta = Mat::Identity(2 * n_x, 2 * n_x);
  const Mat qv = 2.0 * Mat::Identity(n_u * n_x, n_u * n_x);
  sub.cost.q_v = qv.sparseView();
  const Mat ru = Mat::Identity(n_u, n_u);
  sub.cost.r_u = ru.sparseView();
  sub.g_value = g_value;
  sub.grad_x = Mat::Zero(2 * n_x, g_value.size());
  sub.grad_u = b_ctrl;
  sub.b_ctrl = b_ctrl;
  sub.a_hat = GainOperator(Mat::Identity(n_x, n_x), b_ctrl, n_u, n_x);
  sub.b_hat = b_hat;
  sub.psi = Mat::Identity(2 * n_x, 2 * n_x);
  sub.r_trust = r_trust;
  for (Eigen::Index j = 0; j < g_value.size(); ++j) sub.labels.push_back("c" + std::to_string(j));
  return sub;
}

}  // namespace nrto::testing
