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

#include "nrto/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace nrto {

DynamicsModel DynamicsModel::make(ModelId id) {
  DynamicsModel m;
  m.id = id;
  m.nx = state_dim(id);
  m.nu = control_dim(id);
  return m;
}

DynamicsModel DynamicsModel::from_spec(const ScenarioSpec& spec) {
  DynamicsModel m = make(spec.model);
  m.unicycle = spec.unicycle;
  m.quadcopter = spec.quadcopter;
  m.franka = spec.franka;
  return m;
}

Vec DynamicsModel::saturate(const Vec& u) const {
  Vec out = u;
  switch (id) {
    case ModelId::unicycle:
      out(0) = std::clamp(u(0), -unicycle.v_max, unicycle.v_max);
      out(1) = std::clamp(u(1), -unicycle.omega_max, unicycle.omega_max);
      break;
    case ModelId::quadcopter:
      out(0) = std::clamp(u(0), quadcopter.thrust_min, quadcopter.thrust_max);
      for (int i = 1; i < 4; ++i) out(i) = std::clamp(u(i), -quadcopter.torque_max, quadcopter.torque_max);
      break;
    case ModelId::franka:
      out = u.cwiseMax(-franka.tau_max).cwiseMin(franka.tau_max);
      break;
  }
  return out;
}

std::vector<int> DynamicsModel::angle_indices() const {
  switch (id) {
    case ModelId::unicycle:
      return {2};
    case ModelId::quadcopter:
      return {6, 7, 8};
    case ModelId::franka:
      return {};
  }
  return {};
}

namespace {

void check_inputs(const DynamicsModel& model, const Vec& x, const Vec& u) {
  if (x.size() != model.nx || u.size() != model.nu)
    throw DimensionError("dynamics: expected state of size " + std::to_string(model.nx) + " and control of size " +
                         std::to_string(model.nu));
  if (!x.allFinite() || !u.allFinite()) throw NumericError("dynamics: non-finite state or control");
}

constexpr double kPitchSingularity = 1e-9;

// Continuous-time quadcopter vector field.
Vec quad_rhs(const QuadcopterParams& p, const Vec& x, const Vec& u) {
  const double phi = x(6), theta = x(7), psi = x(8);
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double cth = std::cos(theta), sth = std::sin(theta);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);
  if (std::abs(cth) < kPitchSingularity) throw NumericError("quadcopter: pitch at +-pi/2, Euler-rate map undefined");
  const double f = u(0);
  const Eigen::Vector3d w = x.segment<3>(9);
  const Eigen::Vector3d& J = p.inertia;

  Vec dx(12);
  dx.segment<3>(0) = x.segment<3>(3);
  dx(3) = f / p.mass * (cpsi * sth * cphi + spsi * sphi);
  dx(4) = f / p.mass * (spsi * sth * cphi - cpsi * sphi);
  dx(5) = f / p.mass * (cth * cphi) - p.gravity;
  const double tth = sth / cth;
  dx(6) = w(0) + sphi * tth * w(1) + cphi * tth * w(2);
  dx(7) = cphi * w(1) - sphi * w(2);
  dx(8) = (sphi * w(1) + cphi * w(2)) / cth;
  const Eigen::Vector3d h = J.cwiseProduct(w);
  const Eigen::Vector3d tau = u.segment<3>(1);
  dx.segment<3>(9) = (tau - w.cross(h)).cwiseQuotient(J);
  return dx;
}

// Modified DH rows (a_{i-1}, d_i, alpha_{i-1}) of the Panda arm; the eighth
// row is the fixed flange offset.
constexpr std::array<std::array<double, 3>, 8> kPandaDh{{
    {0.0, 0.333, 0.0},
    {0.0, 0.0, -M_PI / 2},
    {0.0, 0.316, M_PI / 2},
    {0.0825, 0.0, M_PI / 2},
    {-0.0825, 0.384, -M_PI / 2},
    {0.0, 0.0, M_PI / 2},
    {0.088, 0.0, M_PI / 2},
    {0.0, 0.107, 0.0},
}};

Eigen::Isometry3d dh_transform(double a, double d, double alpha, double theta) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.rotate(Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitX()));
  t.translate(Eigen::Vector3d(a, 0, 0));
  t.rotate(Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()));
  t.translate(Eigen::Vector3d(0, 0, d));
  return t;
}

// Frames after each joint (index 0..6) and the flange frame (index 7).
std::array<Eigen::Isometry3d, 8> panda_frames(const Vec& q) {
  if (q.size() < 7) throw DimensionError("franka: need 7 joint angles");
  std::array<Eigen::Isometry3d, 8> frames;
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (int i = 0; i < 8; ++i) {
    const auto& row = kPandaDh[static_cast<std::size_t>(i)];
    t = t * dh_transform(row[0], row[1], row[2], i < 7 ? q(i) : 0.0);
    frames[static_cast<std::size_t>(i)] = t;
  }
  return frames;
}

}  // namespace

Vec step(const DynamicsModel& model, const Vec& x, const Vec& u_in, double dt) {
  check_inputs(model, x, u_in);
  const Vec u = model.saturate(u_in);
  switch (model.id) {
    case ModelId::unicycle: {
      Vec next(3);
      next(0) = x(0) + u(0) * std::cos(x(2)) * dt;
      next(1) = x(1) + u(0) * std::sin(x(2)) * dt;
      next(2) = x(2) + u(1) * dt;
      return next;
    }
    case ModelId::quadcopter:
      return x + dt * quad_rhs(model.quadcopter, x, u);
    case ModelId::franka: {
      const auto& p = model.franka;
      const Vec q = x.head(7), dq = x.tail(7);
      const Vec ddq = (u - p.damping.cwiseProduct(dq)).cwiseQuotient(p.inertia);
      Vec next(14);
      next.tail(7) = (dq + dt * ddq).cwiseMax(-p.dq_max).cwiseMin(p.dq_max);
      next.head(7) = (q + dt * next.tail(7)).cwiseMax(p.q_min).cwiseMin(p.q_max);
      return next;
    }
  }
  return x;
}

std::pair<Mat, Mat> jacobians(const DynamicsModel& model, const Vec& x, const Vec& u, double dt) {
  check_inputs(model, x, u);
  const int nx = model.nx, nu = model.nu;
  Mat A = Mat::Identity(nx, nx);
  Mat B = Mat::Zero(nx, nu);
  switch (model.id) {
    case ModelId::unicycle: {
      const double v = u(0), th = x(2);
      A(0, 2) = -dt * v * std::sin(th);
      A(1, 2) = dt * v * std::cos(th);
      B(0, 0) = dt * std::cos(th);
      B(1, 0) = dt * std::sin(th);
      B(2, 1) = dt;
      break;
    }
    case ModelId::quadcopter: {
      const auto& p = model.quadcopter;
      const double phi = x(6), theta = x(7), psi = x(8);
      const double cphi = std::cos(phi), sphi = std::sin(phi);
      const double cth = std::cos(theta), sth = std::sin(theta);
      const double cpsi = std::cos(psi), spsi = std::sin(psi);
      if (std::abs(cth) < kPitchSingularity) throw NumericError("quadcopter: pitch at +-pi/2, Jacobian undefined");
      const double f = u(0), m = p.mass;
      const Eigen::Vector3d w = x.segment<3>(9);
      const Eigen::Vector3d& J = p.inertia;

      Mat F = Mat::Zero(12, 12);  // d(xdot)/dx
      F.block<3, 3>(0, 3).setIdentity();
      // thrust direction R e3 and its partials in (phi, theta, psi)
      F(3, 6) = f / m * (-cpsi * sth * sphi + spsi * cphi);
      F(4, 6) = f / m * (-spsi * sth * sphi - cpsi * cphi);
      F(5, 6) = f / m * (-cth * sphi);
      F(3, 7) = f / m * (cpsi * cth * cphi);
      F(4, 7) = f / m * (spsi * cth * cphi);
      F(5, 7) = f / m * (-sth * cphi);
      F(3, 8) = f / m * (-spsi * sth * cphi + cpsi * sphi);
      F(4, 8) = f / m * (cpsi * sth * cphi + spsi * sphi);
      // Euler-rate map T(phi, theta) w
      const double tth = sth / cth;
      const double a = sphi * w(1) + cphi * w(2);
      F(6, 6) = cphi * tth * w(1) - sphi * tth * w(2);
      F(7, 6) = -sphi * w(1) - cphi * w(2);
      F(8, 6) = (cphi * w(1) - sphi * w(2)) / cth;
      F(6, 7) = a / (cth * cth);
      F(8, 7) = a * sth / (cth * cth);
      F(6, 9) = 1.0;
      F(6, 10) = sphi * tth;
      F(6, 11) = cphi * tth;
      F(7, 10) = cphi;
      F(7, 11) = -sphi;
      F(8, 10) = sphi / cth;
      F(8, 11) = cphi / cth;
      // gyroscopic term -J^{-1} (w x J w)
      F(9, 10) = -(J(2) - J(1)) * w(2) / J(0);
      F(9, 11) = -(J(2) - J(1)) * w(1) / J(0);
      F(10, 9) = -(J(0) - J(2)) * w(2) / J(1);
      F(10, 11) = -(J(0) - J(2)) * w(0) / J(1);
      F(11, 9) = -(J(1) - J(0)) * w(1) / J(2);
      F(11, 10) = -(J(1) - J(0)) * w(0) / J(2);
      A += dt * F;

      B(3, 0) = dt / m * (cpsi * sth * cphi + spsi * sphi);
      B(4, 0) = dt / m * (spsi * sth * cphi - cpsi * sphi);
      B(5, 0) = dt / m * (cth * cphi);
      for (int i = 0; i < 3; ++i) B(9 + i, 1 + i) = dt / J(i);
      break;
    }
    case ModelId::franka: {
      // dq' = dq + dt (tau - d dq) / I ;  q' = q + dt dq'
      const auto& p = model.franka;
      for (int i = 0; i < 7; ++i) {
        const double decay = 1.0 - dt * p.damping(i) / p.inertia(i);
        A(7 + i, 7 + i) = decay;
        A(i, 7 + i) = dt * decay;
        B(7 + i, i) = dt / p.inertia(i);
        B(i, i) = dt * dt / p.inertia(i);
      }
      break;
    }
  }
  return {A, B};
}

StackedTrajectory rollout(const DynamicsModel& model, const AffinePolicy& policy, const Vec& x0_bar, const Vec& zeta,
                          double dt) {
  const int T = policy.horizon();
  const int nx = model.nx, nu = model.nu;
  if (zeta.size() != (T + 1) * nx)
    throw DimensionError("rollout: zeta must have (T+1)*n_x = " + std::to_string((T + 1) * nx) + " entries");
  if (x0_bar.size() != nx) throw DimensionError("rollout: x0_bar has wrong size");
  if (static_cast<int>(policy.gains.size()) != T) throw DimensionError("rollout: policy gains/u_bar length mismatch");

  StackedTrajectory traj;
  traj.n_x = nx;
  traj.n_u = nu;
  traj.states.resize((T + 1) * nx);
  traj.controls.resize(T * nu);
  traj.state(0) = x0_bar + zeta.head(nx);
  for (int k = 0; k < T; ++k) {
    const auto d_prev = zeta.segment(k * nx, nx);  // d_{k-1}, with d_{-1} = d_bar_0
    const Vec u = policy.u_bar[static_cast<std::size_t>(k)] + policy.gains[static_cast<std::size_t>(k)] * d_prev;
    traj.control(k) = u;
    traj.state(k + 1) = step(model, traj.state(k), u, dt) + zeta.segment((k + 1) * nx, nx);
  }
  return traj;
}

StackedTrajectory rollout_nominal(const DynamicsModel& model, const Vec& controls, const Vec& x0_bar, double dt) {
  const int T = static_cast<int>(controls.size()) / model.nu;
  StackedTrajectory traj;
  traj.n_x = model.nx;
  traj.n_u = model.nu;
  traj.states.resize((T + 1) * model.nx);
  traj.controls = controls;
  traj.state(0) = x0_bar;
  for (int k = 0; k < T; ++k) traj.state(k + 1) = step(model, traj.state(k), traj.control(k), dt);
  return traj;
}

Eigen::Vector3d franka_forward_kinematics(const Vec& q) { return panda_frames(q)[7].translation(); }

Eigen::Matrix<double, 3, 7> franka_position_jacobian(const Vec& q) {
  const auto frames = panda_frames(q);
  const Eigen::Vector3d p_ee = frames[7].translation();
  Eigen::Matrix<double, 3, 7> jac;
  for (int i = 0; i < 7; ++i) {
    const auto& f = frames[static_cast<std::size_t>(i)];
    const Eigen::Vector3d z = f.linear().col(2);
    jac.col(i) = z.cross(p_ee - f.translation());
  }
  return jac;
}

Vec workspace_position(const DynamicsModel& model, const Vec& x) {
  switch (model.id) {
    case ModelId::unicycle:
      return x.head(2);
    case ModelId::quadcopter:
      return x.head(3);
    case ModelId::franka:
      return franka_forward_kinematics(x.head(7));
  }
  return {};
}

Mat workspace_jacobian(const DynamicsModel& model, const Vec& x) {
  Mat jac = Mat::Zero(model.workspace_dim(), model.nx);
  switch (model.id) {
    case ModelId::unicycle:
      jac.leftCols(2).setIdentity();
      break;
    case ModelId::quadcopter:
      jac.leftCols(3).setIdentity();
      break;
    case ModelId::franka:
      jac.leftCols(7) = franka_position_jacobian(x.head(7));
      break;
  }
  return jac;
}

}  // namespace nrto
