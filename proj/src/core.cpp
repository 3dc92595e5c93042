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

#include "nrto/core.hpp"

#include <cmath>
#include <sstream>

namespace nrto {

std::string to_string(ModelId id) {
  switch (id) {
    case ModelId::unicycle:
      return "unicycle";
    case ModelId::quadcopter:
      return "quadcopter";
    case ModelId::franka:
      return "franka";
  }
  return "unknown";
}

ModelId model_id_from_string(const std::string& name) {
  if (name == "unicycle") return ModelId::unicycle;
  if (name == "quadcopter") return ModelId::quadcopter;
  if (name == "franka") return ModelId::franka;
  throw DataError("unknown model '" + name + "' (expected unicycle, quadcopter or franka)");
}

UncertaintySet UncertaintySet::identity(int dim, double tau) {
  return UncertaintySet{Mat::Identity(dim, dim), Mat::Identity(dim, dim), tau};
}

AffinePolicy AffinePolicy::zeros(int horizon, int n_u, int n_x) {
  AffinePolicy policy;
  policy.u_bar.assign(static_cast<std::size_t>(horizon), Vec::Zero(n_u));
  policy.gains.assign(static_cast<std::size_t>(horizon), Mat::Zero(n_u, n_x));
  return policy;
}

FrankaParams::FrankaParams() {
  q_min.resize(7);
  q_min << -2.9007, -1.8361, -2.9007, -3.0770, -2.8763, 0.4398, -3.0508;
  q_max.resize(7);
  q_max << 2.9007, 1.8361, 2.9007, -0.1169, 2.8763, 4.6216, 3.0508;
  dq_max.resize(7);
  dq_max << 2.62, 2.62, 2.62, 2.62, 5.26, 4.18, 5.26;
  tau_max.resize(7);
  tau_max << 87, 87, 87, 87, 12, 12, 12;
  damping = Vec::Constant(7, 0.5);
  inertia = Vec::Constant(7, 1.0);
}

int state_dim(ModelId id) {
  switch (id) {
    case ModelId::unicycle:
      return 3;
    case ModelId::quadcopter:
      return 12;
    case ModelId::franka:
      return 14;
  }
  return 0;
}

int control_dim(ModelId id) {
  switch (id) {
    case ModelId::unicycle:
      return 2;
    case ModelId::quadcopter:
      return 4;
    case ModelId::franka:
      return 7;
  }
  return 0;
}

std::pair<Vec, Vec> default_control_limits(const ScenarioSpec& spec) {
  switch (spec.model) {
    case ModelId::unicycle: {
      Vec hi(2);
      hi << spec.unicycle.v_max, spec.unicycle.omega_max;
      return {-hi, hi};
    }
    case ModelId::quadcopter: {
      const auto& p = spec.quadcopter;
      Vec lo(4), hi(4);
      lo << p.thrust_min, -p.torque_max, -p.torque_max, -p.torque_max;
      hi << p.thrust_max, p.torque_max, p.torque_max, p.torque_max;
      return {lo, hi};
    }
    case ModelId::franka:
      return {-spec.franka.tau_max, spec.franka.tau_max};
  }
  return {};
}

namespace {

bool all_finite(const Mat& m) { return m.allFinite(); }

void check_weight(std::vector<Violation>& out, const std::string& path, const Mat& w, int n, bool strict) {
  if (w.rows() != n || w.cols() != n) {
    out.push_back({path, "weight must be " + std::to_string(n) + "x" + std::to_string(n)});
    return;
  }
  if (!all_finite(w)) {
    out.push_back({path, "weight has non-finite entries"});
    return;
  }
  // R appears only through R'R, so definiteness is a property of that product.
  const Mat gram = w.transpose() * w;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  const double lo = eig.eigenvalues().minCoeff();
  if (strict && !(lo > 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())))
    out.push_back({path, "weight must be positive definite"});
}

}  // namespace

std::vector<Violation> validate_scenario(const ScenarioSpec& spec) {
  std::vector<Violation> out;
  const int nx = state_dim(spec.model);
  const int nu = control_dim(spec.model);
  const int ws = spec.model == ModelId::unicycle ? 2 : 3;

  if (spec.horizon < 1) out.push_back({"horizon.T", "horizon must be at least 1"});
  if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) out.push_back({"model.dt", "dt must be positive"});
  if (spec.x0_bar.size() != nx)
    out.push_back({"model.x0", "x0 must have " + std::to_string(nx) + " entries"});
  else if (!spec.x0_bar.allFinite())
    out.push_back({"model.x0", "x0 has non-finite entries"});

  for (std::size_t i = 0; i < spec.obstacles.size(); ++i) {
    const auto& o = spec.obstacles[i];
    const std::string path = "obstacles[" + std::to_string(i) + "]";
    if (!(o.radius > 0.0)) out.push_back({path + ".radius", "obstacle radius must be positive"});
    if (o.center.size() != ws)
      out.push_back({path + ".center", "obstacle center must have " + std::to_string(ws) + " coordinates"});
  }
  if (spec.obstacle_margin < 0.0) out.push_back({"obstacles.margin", "margin must be nonnegative"});
  if (spec.goal) {
    if (spec.goal->center.size() != ws)
      out.push_back({"goal.center", "goal center must have " + std::to_string(ws) + " coordinates"});
    if (!(spec.goal->half_width > 0.0)) out.push_back({"goal.half_width", "goal half width must be positive"});
  }

  if (spec.control_min.size() != nu || spec.control_max.size() != nu) {
    out.push_back({"model.control_limits", "control limits must have " + std::to_string(nu) + " entries"});
  } else if (!(spec.control_min.array() < spec.control_max.array()).all()) {
    out.push_back({"model.control_limits", "control_min must be strictly below control_max"});
  }
  if (spec.state_min.has_value() != spec.state_max.has_value()) {
    out.push_back({"model.state_limits", "state_min and state_max must be given together"});
  } else if (spec.state_min) {
    if (spec.state_min->size() != nx || spec.state_max->size() != nx)
      out.push_back({"model.state_limits", "state limits must have " + std::to_string(nx) + " entries"});
    else if (!(spec.state_min->array() <= spec.state_max->array()).all())
      out.push_back({"model.state_limits", "state_min must not exceed state_max"});
  }

  if (static_cast<int>(spec.r_u.size()) != spec.horizon) out.push_back({"weights.r_u", "need one R_u per step"});
  if (static_cast<int>(spec.r_k.size()) != spec.horizon) out.push_back({"weights.r_k", "need one R_K per step"});
  for (std::size_t k = 0; k < spec.r_u.size(); ++k)
    check_weight(out, "weights.r_u[" + std::to_string(k) + "]", spec.r_u[k], nu, false);
  for (std::size_t k = 0; k < spec.r_k.size(); ++k)
    check_weight(out, "weights.r_k[" + std::to_string(k) + "]", spec.r_k[k], nu, true);

  if (!spec.initial_controls.empty()) {
    if (static_cast<int>(spec.initial_controls.size()) != spec.horizon)
      out.push_back({"model.initial_controls", "need one warm-start control per step"});
    for (const auto& u : spec.initial_controls)
      if (u.size() != nu) {
        out.push_back({"model.initial_controls", "warm-start control has wrong size"});
        break;
      }
  }

  const auto& unc = spec.uncertainty;
  if (!(unc.tau > 0.0) || !std::isfinite(unc.tau)) out.push_back({"uncertainty.tau", "tau must be positive"});
  const Mat& s = unc.s_metric;
  if (s.rows() == 0 || s.rows() != s.cols()) {
    out.push_back({"uncertainty.s_metric", "s_metric must be a nonempty square matrix"});
  } else if (!all_finite(s)) {
    out.push_back({"uncertainty.s_metric", "s_metric has non-finite entries"});
  } else {
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()))
      out.push_back({"uncertainty.s_metric", "s_metric is not symmetric"});
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      out.push_back({"uncertainty.s_metric", "s_metric not positive definite"});
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> eig(s, Eigen::EigenvaluesOnly);
      const double cond = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
      if (!(cond <= 1e12)) out.push_back({"uncertainty.s_metric", "s_metric is near singular (condition number > 1e12)"});
    }
  }
  const int zeta_dim = (spec.horizon + 1) * nx;
  if (unc.gamma.rows() != zeta_dim)
    out.push_back({"uncertainty.gamma", "gamma must have (T+1)*n_x = " + std::to_string(zeta_dim) + " rows"});
  if (unc.gamma.cols() != s.rows()) out.push_back({"uncertainty.gamma", "gamma columns must match s_metric size"});
  return out;
}

void require_valid(const ScenarioSpec& spec) {
  const auto violations = validate_scenario(spec);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid scenario:";
  for (const auto& v : violations) os << "\n  " << v.path << ": " << v.message;
  throw DataError(os.str());
}

SpMat block_diagonal(const std::vector<Mat>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::Index r0 = 0, c0 = 0;
  for (const auto& b : blocks) {
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index i = 0; i < b.rows(); ++i)
        if (b(i, j) != 0.0) triplets.emplace_back(r0 + i, c0 + j, b(i, j));
    r0 += b.rows();
    c0 += b.cols();
  }
  SpMat out(rows, cols);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace nrto
