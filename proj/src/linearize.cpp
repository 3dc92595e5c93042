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

#include "nrto/linearize.hpp"

#include <cmath>

namespace nrto {

Sensitivities build_sensitivities(const DynamicsModel& model, const StackedTrajectory& nominal, double dt) {
  const int T = nominal.horizon();
  const int nx = model.nx, nu = model.nu;
  if (nominal.n_x != nx || nominal.n_u != nu || nominal.states.size() != (T + 1) * nx)
    throw DimensionError("build_sensitivities: nominal trajectory does not match the model");

  std::vector<Mat> a(static_cast<std::size_t>(T)), b(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) {
    auto [ak, bk] = jacobians(model, nominal.state(k), nominal.control(k), dt);
    a[static_cast<std::size_t>(k)] = std::move(ak);
    b[static_cast<std::size_t>(k)] = std::move(bk);
  }

  Sensitivities s;
  s.f_u = Mat::Zero((T + 1) * nx, T * nu);
  s.f_zeta = Mat::Zero((T + 1) * nx, (T + 1) * nx);
  for (int k = 0; k < T; ++k) {
    // control at step k first reaches x_{k+1}
    s.f_u.block((k + 1) * nx, k * nu, nx, nu) = b[static_cast<std::size_t>(k)];
    for (int i = k + 1; i < T; ++i)
      s.f_u.block((i + 1) * nx, k * nu, nx, nu) =
          a[static_cast<std::size_t>(i)] * s.f_u.block(i * nx, k * nu, nx, nu);
  }
  for (int c = 0; c <= T; ++c) {
    // zeta block c enters x_c directly (block 0 is d_bar_0, block c is d_{c-1})
    s.f_zeta.block(c * nx, c * nx, nx, nx).setIdentity();
    for (int i = c; i < T; ++i)
      s.f_zeta.block((i + 1) * nx, c * nx, nx, nx) = a[static_cast<std::size_t>(i)] * s.f_zeta.block(i * nx, c * nx, nx, nx);
  }
  return s;
}

namespace {

// Visits every constraint in canonical order. The visitor receives the label,
// the value and the gradients with respect to one state (knot k) or one
// control (step k).
struct RowSink {
  virtual ~RowSink() = default;
  virtual void state_row(std::string label, int knot, double value, const Vec& grad_state) = 0;
  virtual void control_row(std::string label, int step, int index, double sign, double value) = 0;
};

void enumerate_rows(const ScenarioSpec& spec, const DynamicsModel& model, const StackedTrajectory& traj, RowSink& sink,
                    bool need_gradients) {
  const int T = traj.horizon();
  const int nx = model.nx, nu = model.nu;

  for (int k = 0; k < T; ++k) {
    const auto u = traj.control(k);
    for (int i = 0; i < nu; ++i) {
      sink.control_row("u_max[" + std::to_string(k) + "," + std::to_string(i) + "]", k, i, 1.0,
                       u(i) - spec.control_max(i));
      sink.control_row("u_min[" + std::to_string(k) + "," + std::to_string(i) + "]", k, i, -1.0,
                       spec.control_min(i) - u(i));
    }
  }

  if (spec.state_min) {
    const Vec& lo = *spec.state_min;
    const Vec& hi = *spec.state_max;
    for (int k = 1; k <= T; ++k) {
      const auto x = traj.state(k);
      for (int i = 0; i < nx; ++i) {
        Vec e = Vec::Zero(nx);
        e(i) = 1.0;
        if (std::isfinite(hi(i))) sink.state_row("x_max[" + std::to_string(k) + "," + std::to_string(i) + "]", k, x(i) - hi(i), e);
        if (std::isfinite(lo(i))) sink.state_row("x_min[" + std::to_string(k) + "," + std::to_string(i) + "]", k, lo(i) - x(i), -e);
      }
    }
  }

  for (std::size_t o = 0; o < spec.obstacles.size(); ++o) {
    const auto& obs = spec.obstacles[o];
    for (int k = 1; k <= T; ++k) {
      const Vec x = traj.state(k);
      const Vec diff = workspace_position(model, x) - obs.center;
      const double dist = diff.norm();
      Vec grad;
      if (need_gradients) {
        if (!(dist > 1e-12))
          throw NumericError("linearize_constraints: nominal position coincides with the center of obstacle " +
                             std::to_string(o));
        grad = -workspace_jacobian(model, x).transpose() * (diff / dist);
      }
      sink.state_row("obs[" + std::to_string(o) + "," + std::to_string(k) + "]", k,
                     obs.radius + spec.obstacle_margin - dist, grad);
    }
  }

  if (spec.goal) {
    const Vec x = traj.state(T);
    const Vec pos = workspace_position(model, x);
    Mat jac;
    if (need_gradients) jac = workspace_jacobian(model, x);
    for (int i = 0; i < pos.size(); ++i) {
      const double c = spec.goal->center(i), w = spec.goal->half_width;
      Vec g;
      if (need_gradients) g = jac.row(i).transpose();
      sink.state_row("goal_max[" + std::to_string(i) + "]", T, pos(i) - (c + w), g);
      sink.state_row("goal_min[" + std::to_string(i) + "]", T, (c - w) - pos(i), need_gradients ? Vec(-g) : g);
    }
  }
}

struct LinearSink final : RowSink {
  int T, nx, nu;
  std::vector<ConstraintRow> rows;
  LinearSink(int t, int x, int u) : T(t), nx(x), nu(u) {}
  void state_row(std::string label, int knot, double value, const Vec& grad_state) override {
    ConstraintRow row{std::move(label), value, Vec::Zero((T + 1) * nx), Vec::Zero(T * nu)};
    row.grad_x.segment(knot * nx, nx) = grad_state;
    rows.push_back(std::move(row));
  }
  void control_row(std::string label, int step, int index, double sign, double value) override {
    ConstraintRow row{std::move(label), value, Vec::Zero((T + 1) * nx), Vec::Zero(T * nu)};
    row.grad_u(step * nu + index) = sign;
    rows.push_back(std::move(row));
  }
};

struct ValueSink final : RowSink {
  std::vector<double> values;
  void state_row(std::string, int, double value, const Vec&) override { values.push_back(value); }
  void control_row(std::string, int, int, double, double value) override { values.push_back(value); }
};

}  // namespace

std::vector<ConstraintRow> linearize_constraints(const ScenarioSpec& spec, const DynamicsModel& model,
                                                 const StackedTrajectory& nominal) {
  LinearSink sink(nominal.horizon(), model.nx, model.nu);
  enumerate_rows(spec, model, nominal, sink, true);
  return std::move(sink.rows);
}

Vec evaluate_constraints(const ScenarioSpec& spec, const DynamicsModel& model, const StackedTrajectory& traj) {
  ValueSink sink;
  enumerate_rows(spec, model, traj, sink, false);
  return Eigen::Map<const Vec>(sink.values.data(), static_cast<Eigen::Index>(sink.values.size()));
}

GainOperator::GainOperator(Mat w_head, Mat b_ctrl, int n_u, int n_x)
    : w_head_(std::move(w_head)), b_ctrl_(std::move(b_ctrl)), n_u_(n_u), n_x_(n_x) {
  if (n_u_ <= 0 || n_x_ <= 0 || b_ctrl_.rows() % n_u_ != 0)
    throw DimensionError("GainOperator: control gradient rows must be a multiple of n_u");
  if (w_head_.cols() != (b_ctrl_.rows() / n_u_) * n_x_)
    throw DimensionError("GainOperator: W_head must have T*n_x columns");
}

Mat GainOperator::apply(const Vec& kv) const {
  if (kv.size() != nkv()) throw DimensionError("GainOperator::apply: kv has wrong length");
  const int T = static_cast<int>(b_ctrl_.rows()) / n_u_;
  const Eigen::Index ng = b_ctrl_.cols();
  Mat stacked(T * n_x_, ng);
  for (int k = 0; k < T; ++k) {
    Eigen::Map<const Mat> gain(kv.data() + static_cast<Eigen::Index>(k) * n_u_ * n_x_, n_u_, n_x_);
    stacked.middleRows(k * n_x_, n_x_).noalias() = gain.transpose() * b_ctrl_.middleRows(k * n_u_, n_u_);
  }
  return w_head_ * stacked;
}

Vec GainOperator::apply_transpose(const Mat& y) const {
  if (y.rows() != nz() || y.cols() != count()) throw DimensionError("GainOperator::apply_transpose: shape mismatch");
  const int T = static_cast<int>(b_ctrl_.rows()) / n_u_;
  const Mat v = w_head_.transpose() * y;  // T n_x x n_g
  Vec out(nkv());
  for (int k = 0; k < T; ++k) {
    Eigen::Map<Mat> block(out.data() + static_cast<Eigen::Index>(k) * n_u_ * n_x_, n_u_, n_x_);
    block.noalias() = b_ctrl_.middleRows(k * n_u_, n_u_) * v.middleRows(k * n_x_, n_x_).transpose();
  }
  return out;
}

Mat GainOperator::gram() const {
  const int T = static_cast<int>(b_ctrl_.rows()) / n_u_;
  const Mat g = w_head_.transpose() * w_head_;
  const Mat c = b_ctrl_ * b_ctrl_.transpose();
  const int n = nkv();
  Mat h(n, n);
  // kv index of (k, i, a): k n_u n_x + a n_u + i
  for (int k2 = 0; k2 < T; ++k2)
    for (int a2 = 0; a2 < n_x_; ++a2)
      for (int i2 = 0; i2 < n_u_; ++i2) {
        const int col = k2 * n_u_ * n_x_ + a2 * n_u_ + i2;
        for (int k1 = 0; k1 < T; ++k1)
          for (int a1 = 0; a1 < n_x_; ++a1) {
            const double gv = g(k1 * n_x_ + a1, k2 * n_x_ + a2);
            for (int i1 = 0; i1 < n_u_; ++i1)
              h(k1 * n_u_ * n_x_ + a1 * n_u_ + i1, col) = gv * c(k1 * n_u_ + i1, k2 * n_u_ + i2);
          }
      }
  return h;
}

Vec GainOperator::gram_diagonal() const {
  const int T = static_cast<int>(b_ctrl_.rows()) / n_u_;
  const Vec gd = w_head_.colwise().squaredNorm().transpose();
  const Vec cd = b_ctrl_.rowwise().squaredNorm();
  Vec d(nkv());
  for (int k = 0; k < T; ++k)
    for (int a = 0; a < n_x_; ++a)
      for (int i = 0; i < n_u_; ++i) d(k * n_u_ * n_x_ + a * n_u_ + i) = gd(k * n_x_ + a) * cd(k * n_u_ + i);
  return d;
}

Mat GainOperator::dense(int j) const {
  const int T = static_cast<int>(b_ctrl_.rows()) / n_u_;
  Mat out(nz(), nkv());
  for (int k = 0; k < T; ++k)
    for (int a = 0; a < n_x_; ++a)
      for (int i = 0; i < n_u_; ++i)
        out.col(k * n_u_ * n_x_ + a * n_u_ + i) = w_head_.col(k * n_x_ + a) * b_ctrl_(k * n_u_ + i, j);
  return out;
}

void GainOperator::append_triplets(int j, Eigen::Index row0, Eigen::Index col0, double scale,
                                   std::vector<Eigen::Triplet<double>>& out) const {
  const int T = static_cast<int>(b_ctrl_.rows()) / n_u_;
  for (int k = 0; k < T; ++k)
    for (int i = 0; i < n_u_; ++i) {
      const double bj = scale * b_ctrl_(k * n_u_ + i, j);
      if (bj == 0.0) continue;
      for (int a = 0; a < n_x_; ++a) {
        const Eigen::Index col = col0 + k * n_u_ * n_x_ + a * n_u_ + i;
        const auto w = w_head_.col(k * n_x_ + a);
        for (Eigen::Index r = 0; r < w.size(); ++r)
          if (w(r) != 0.0) out.emplace_back(row0 + r, col, bj * w(r));
      }
    }
}

Mat psi_from_metric(const Mat& s_metric) {
  Eigen::LLT<Mat> llt(s_metric);
  if (llt.info() != Eigen::Success) throw FactorizationError("psi_from_metric: s_metric is not positive definite");
  Mat psi = Mat::Identity(s_metric.rows(), s_metric.cols());
  llt.matrixL().solveInPlace(psi);
  return psi;
}

SocpData build_socp_data(const ScenarioSpec& spec, const Sensitivities& sens, const std::vector<ConstraintRow>& rows) {
  const int nx = state_dim(spec.model);
  const int nu = control_dim(spec.model);
  const int T = spec.horizon;
  const auto ng = static_cast<Eigen::Index>(rows.size());

  SocpData out;
  out.psi = psi_from_metric(spec.uncertainty.s_metric);
  const Mat w = std::sqrt(spec.uncertainty.tau) * out.psi * spec.uncertainty.gamma.transpose();

  Mat grad_x((T + 1) * nx, ng);
  out.b_ctrl.resize(T * nu, ng);
  for (Eigen::Index j = 0; j < ng; ++j) {
    const auto& row = rows[static_cast<std::size_t>(j)];
    grad_x.col(j) = row.grad_x;
    out.b_ctrl.col(j) = row.grad_u;
  }
  out.b_ctrl.noalias() += sens.f_u.transpose() * grad_x;
  out.b_hat = w * (sens.f_zeta.transpose() * grad_x);
  out.a_hat = GainOperator(w.leftCols(T * nx), out.b_ctrl, nu, nx);
  return out;
}

CostData build_cost(const ScenarioSpec& spec) {
  const int nx = state_dim(spec.model);
  std::vector<Mat> qv_blocks, ru_blocks;
  for (int k = 0; k < spec.horizon; ++k) {
    const Mat& rk = spec.r_k[static_cast<std::size_t>(k)];
    const Mat rtr = rk.transpose() * rk;
    Mat block = Mat::Zero(nx * rtr.rows(), nx * rtr.cols());
    for (int a = 0; a < nx; ++a) block.block(a * rtr.rows(), a * rtr.cols(), rtr.rows(), rtr.cols()) = 2.0 * rtr;
    qv_blocks.push_back(std::move(block));
    const Mat& ru = spec.r_u[static_cast<std::size_t>(k)];
    ru_blocks.push_back(0.5 * (ru + ru.transpose()));
  }
  return CostData{block_diagonal(qv_blocks), block_diagonal(ru_blocks)};
}

double LinearizedSubproblem::control_cost(const Vec& delta_u) const {
  const Vec u = u_hat + delta_u;
  return u.dot(cost.r_u * u);
}

double LinearizedSubproblem::gain_cost(const Vec& kv) const { return 0.5 * kv.dot(cost.q_v * kv); }

Vec LinearizedSubproblem::robust_margins(const Vec& kv) const {
  if (n_g() == 0) return {};
  return (a_hat.apply(kv) + b_hat).colwise().norm().transpose();
}

Vec LinearizedSubproblem::robust_values(const Vec& delta_u, const Vec& kv) const {
  if (n_g() == 0) return {};
  return g_value + b_ctrl.transpose() * delta_u + robust_margins(kv);
}

LinearizedSubproblem build_subproblem(const ScenarioSpec& spec, const DynamicsModel& model,
                                      const StackedTrajectory& nominal, double r_trust) {
  LinearizedSubproblem sub;
  sub.horizon = spec.horizon;
  sub.n_x = model.nx;
  sub.n_u = model.nu;
  sub.n_z = spec.uncertainty.nz();
  sub.u_hat = nominal.controls;
  sub.sens = build_sensitivities(model, nominal, spec.dt);
  sub.cost = build_cost(spec);
  sub.r_trust = r_trust;

  const auto rows = linearize_constraints(spec, model, nominal);
  const auto ng = static_cast<Eigen::Index>(rows.size());
  sub.g_value.resize(ng);
  sub.grad_x.resize((spec.horizon + 1) * model.nx, ng);
  sub.grad_u.resize(spec.horizon * model.nu, ng);
  for (Eigen::Index j = 0; j < ng; ++j) {
    const auto& row = rows[static_cast<std::size_t>(j)];
    sub.g_value(j) = row.value;
    sub.grad_x.col(j) = row.grad_x;
    sub.grad_u.col(j) = row.grad_u;
    sub.labels.push_back(row.label);
  }
  auto socp = build_socp_data(spec, sub.sens, rows);
  sub.a_hat = std::move(socp.a_hat);
  sub.b_hat = std::move(socp.b_hat);
  sub.b_ctrl = std::move(socp.b_ctrl);
  sub.psi = std::move(socp.psi);
  return sub;
}

}  // namespace nrto
