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

#ifndef NRTO_DYNAMICS_HPP
#define NRTO_DYNAMICS_HPP

#include "nrto/core.hpp"

#include <utility>

namespace nrto {

/// Discrete-time benchmark model: unicycle (3,2), quadcopter (12,4), franka (14,7).
struct DynamicsModel {
  ModelId id = ModelId::unicycle;
  int nx = 3;
  int nu = 2;
  UnicycleParams unicycle;
  QuadcopterParams quadcopter;
  FrankaParams franka;

  static DynamicsModel make(ModelId id);
  static DynamicsModel from_spec(const ScenarioSpec& spec);

  /// Element-wise input saturation to the model's actuator limits.
  Vec saturate(const Vec& u) const;

  /// Indices of state components that are angles (wrapped in residuals).
  std::vector<int> angle_indices() const;

  /// Dimension of the workspace used for obstacles and goals.
  int workspace_dim() const { return id == ModelId::unicycle ? 2 : 3; }
};

/// Forward-Euler step with input saturation (and franka post-update clipping).
Vec step(const DynamicsModel& model, const Vec& x, const Vec& u, double dt);

/// Analytic Jacobians of the smooth interior dynamics (active clamps ignored).
std::pair<Mat, Mat> jacobians(const DynamicsModel& model, const Vec& x, const Vec& u, double dt);

/// Closed-loop rollout under u_k = u_bar_k + K_k zeta_k, with
/// zeta = [d_bar_0; d_0; ...; d_{T-1}].
StackedTrajectory rollout(const DynamicsModel& model, const AffinePolicy& policy, const Vec& x0_bar,
                          const Vec& zeta, double dt);

/// Open-loop rollout of a stacked control sequence with zero disturbance.
StackedTrajectory rollout_nominal(const DynamicsModel& model, const Vec& controls, const Vec& x0_bar, double dt);

/// Workspace position of a state (planar position, body position, or
/// end-effector position) and its Jacobian with respect to the full state.
Vec workspace_position(const DynamicsModel& model, const Vec& x);
Mat workspace_jacobian(const DynamicsModel& model, const Vec& x);

/// Panda flange position from joint angles (modified DH chain).
Eigen::Vector3d franka_forward_kinematics(const Vec& q);
/// 3 x 7 positional Jacobian of the flange.
Eigen::Matrix<double, 3, 7> franka_position_jacobian(const Vec& q);

}  // namespace nrto

#endif  // NRTO_DYNAMICS_HPP
