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

#include "nrto/fit.hpp"

#include <boost/algorithm/string.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>

namespace nrto {

void RolloutLog::check(int n_x, int n_u) const {
  const int T = horizon();
  if (T < 1) throw DataError("rollout log: needs at least one control");
  if (static_cast<int>(measured_states.size()) != T + 1)
    throw DimensionError("rollout log: expected T + 1 = " + std::to_string(T + 1) + " measured states, got " +
                         std::to_string(measured_states.size()));
  if (x0_commanded.size() != n_x) throw DimensionError("rollout log: commanded start has the wrong length");
  for (const auto& x : measured_states)
    if (x.size() != n_x) throw DimensionError("rollout log: measured state has the wrong length");
  for (const auto& u : applied_controls)
    if (u.size() != n_u) throw DimensionError("rollout log: applied control has the wrong length");
  if (!(dt > 0.0)) throw DataError("rollout log: dt must be positive");
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);
  // remainder() maps onto [-pi, pi]; keep +pi for an input of exactly +pi.
  if (w == -std::numbers::pi && a > 0.0) w = std::numbers::pi;
  return w;
}

Vec extract_residuals(const RolloutLog& log, const DynamicsModel& model) {
  log.check(model.nx, model.nu);
  const int nx = model.nx, T = log.horizon();
  Vec zeta((T + 1) * nx);
  zeta.head(nx) = log.measured_states[0] - log.x0_commanded;
  for (int k = 0; k < T; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    zeta.segment((k + 1) * nx, nx) =
        log.measured_states[ks + 1] - step(model, log.measured_states[ks], log.applied_controls[ks], log.dt);
  }
  for (int idx : model.angle_indices())
    for (int k = 0; k <= T; ++k) zeta(k * nx + idx) = wrap_angle(zeta(k * nx + idx));
  return zeta;
}

RolloutLog inject_residuals(const DynamicsModel& model, const Vec& x0_commanded, const std::vector<Vec>& controls,
                            const Vec& zeta, double dt) {
  const int nx = model.nx, T = static_cast<int>(controls.size());
  if (zeta.size() != (T + 1) * nx) throw DimensionError("inject_residuals: zeta must have (T + 1) n_x entries");
  RolloutLog log;
  log.x0_commanded = x0_commanded;
  log.applied_controls = controls;
  log.dt = dt;
  log.measured_states.push_back(x0_commanded + zeta.head(nx));
  for (int k = 0; k < T; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    log.measured_states.push_back(step(model, log.measured_states[ks], controls[ks], dt) +
                                  zeta.segment((k + 1) * nx, nx));
  }
  log.check(nx, model.nu);
  return log;
}

namespace {

// Population covariance of the columns of `samples` plus the trace-scaled ridge.
Mat regularized_covariance(const Mat& samples) {
  const auto n = static_cast<double>(samples.cols());
  const Vec mean = samples.rowwise().mean();
  const Mat centered = samples.colwise() - mean;
  Mat cov = centered * centered.transpose() / n;
  const double eps_reg = 1e-8 * cov.trace() / static_cast<double>(cov.rows()) + 1e-12;
  cov.diagonal().array() += eps_reg;
  return 0.5 * (cov + cov.transpose());
}

Mat spd_inverse(const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw FactorizationError("fit_ellipsoid: covariance is not positive definite");
  return llt.solve(Mat::Identity(cov.rows(), cov.cols()));
}

}  // namespace

UncertaintySet fit_ellipsoid(const std::vector<Vec>& residual_sets, int n_x, int horizon, const FitSettings& settings) {
  if (residual_sets.size() < 2) throw DataError("fit_ellipsoid: need at least 2 rollouts, got " +
                                                std::to_string(residual_sets.size()));
  if (n_x < 1 || horizon < 1) throw DimensionError("fit_ellipsoid: n_x and horizon must be positive");
  const int dim = (horizon + 1) * n_x;
  const auto R = static_cast<Eigen::Index>(residual_sets.size());
  for (const auto& z : residual_sets)
    if (z.size() != dim) throw DimensionError("fit_ellipsoid: every residual set needs (T + 1) n_x entries");

  Mat starts(n_x, R);
  Mat process(n_x, R * horizon);
  for (Eigen::Index r = 0; r < R; ++r) {
    const Vec& z = residual_sets[static_cast<std::size_t>(r)];
    starts.col(r) = z.head(n_x);
    for (int k = 1; k <= horizon; ++k) process.col(r * horizon + k - 1) = z.segment(k * n_x, n_x);
  }
  const Mat s0 = spd_inverse(regularized_covariance(starts));
  const Mat sd = spd_inverse(regularized_covariance(process));

  UncertaintySet set;
  set.gamma = Mat::Identity(dim, dim);
  set.s_metric = Mat::Zero(dim, dim);
  set.s_metric.topLeftCorner(n_x, n_x) = s0;
  for (int k = 1; k <= horizon; ++k) set.s_metric.block(k * n_x, k * n_x, n_x, n_x) = sd;

  double max_energy = 0.0;
  for (const auto& z : residual_sets) max_energy = std::max(max_energy, z.dot(set.s_metric * z));
  set.tau = std::max(max_energy * (1.0 + settings.margin), settings.tau_floor);
  return set;
}

double mahalanobis_energy(const Vec& zeta, const UncertaintySet& set) {
  if (zeta.size() != set.s_metric.rows())
    throw DimensionError("mahalanobis_energy: zeta has " + std::to_string(zeta.size()) + " entries, S is " +
                         std::to_string(set.s_metric.rows()) + " wide");
  return zeta.dot(set.s_metric * zeta);
}

RolloutLog read_rollout_csv(std::istream& is, const std::string& source, int n_x, int n_u, double dt) {
  RolloutLog log;
  log.dt = dt;
  std::string line;
  int line_no = 0;
  bool header = false;
  int expected_k = 0;
  auto fail = [&](const std::string& what) { throw DataError(source + ":" + std::to_string(line_no) + ": " + what); };

  while (std::getline(is, line)) {
    ++line_no;
    boost::algorithm::trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    boost::algorithm::split(cells, line, boost::algorithm::is_any_of(","));
    if (!header) {
      if (cells.empty() || cells[0] != "k") fail("expected a header row starting with 'k'");
      if (static_cast<int>(cells.size()) != 1 + n_x + n_u)
        fail("header has " + std::to_string(cells.size()) + " columns, expected " + std::to_string(1 + n_x + n_u));
      header = true;
      continue;
    }
    if (static_cast<int>(cells.size()) != 1 + n_x + n_u) fail("wrong number of columns");
    auto number = [&](const std::string& cell) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) fail("malformed number '" + cell + "'");
        return v;
      } catch (const std::logic_error&) {
        fail("malformed number '" + cell + "'");
      }
      return 0.0;
    };
    const int k = static_cast<int>(number(cells[0]));
    Vec x(n_x);
    for (int i = 0; i < n_x; ++i) x(i) = number(cells[static_cast<std::size_t>(1 + i)]);
    const bool has_u = !cells[static_cast<std::size_t>(1 + n_x)].empty();
    if (k == -1) {
      log.x0_commanded = x;
      continue;
    }
    if (k != expected_k) fail("expected row k = " + std::to_string(expected_k));
    ++expected_k;
    log.measured_states.push_back(x);
    if (has_u) {
      Vec u(n_u);
      for (int i = 0; i < n_u; ++i) u(i) = number(cells[static_cast<std::size_t>(1 + n_x + i)]);
      log.applied_controls.push_back(u);
    }
  }
  if (!header) throw DataError(source + ": empty rollout log");
  if (log.x0_commanded.size() == 0) throw DataError(source + ": missing the k = -1 commanded-start row");
  try {
    log.check(n_x, n_u);
  } catch (const Error& e) {
    throw DataError(source + ": " + e.what());
  }
  return log;
}

void write_rollout_csv(std::ostream& os, const RolloutLog& log) {
  const auto nx = log.x0_commanded.size();
  const auto nu = log.applied_controls.empty() ? 0 : log.applied_controls.front().size();
  os << "k";
  for (Eigen::Index i = 0; i < nx; ++i) os << ",x" << i;
  for (Eigen::Index i = 0; i < nu; ++i) os << ",u" << i;
  os << '\n' << std::setprecision(17);
  auto row = [&](int k, const Vec& x, const Vec* u) {
    os << k;
    for (Eigen::Index i = 0; i < nx; ++i) os << ',' << x(i);
    for (Eigen::Index i = 0; i < nu; ++i) {
      os << ',';
      if (u) os << (*u)(i);
    }
    os << '\n';
  };
  row(-1, log.x0_commanded, nullptr);
  for (std::size_t k = 0; k < log.measured_states.size(); ++k)
    row(static_cast<int>(k), log.measured_states[k], k < log.applied_controls.size() ? &log.applied_controls[k] : nullptr);
}

}  // namespace nrto
