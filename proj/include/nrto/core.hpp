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

#ifndef NRTO_CORE_HPP
#define NRTO_CORE_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nrto {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

// Error hierarchy. Everything the library throws derives from nrto::Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct FactorizationError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};

enum class ModelId { unicycle, quadcopter, franka };

std::string to_string(ModelId id);
ModelId model_id_from_string(const std::string& name);

/// Ellipsoidal uncertainty set {zeta = gamma * z : z' S z <= tau}.
struct UncertaintySet {
  Mat gamma;     // (T+1) n_x  x  n_z
  Mat s_metric;  // n_z x n_z, SPD
  double tau = 0.0;

  int nz() const { return static_cast<int>(s_metric.rows()); }

  /// Identity map and identity metric over a stacked disturbance of size dim.
  static UncertaintySet identity(int dim, double tau);
};

/// Affine disturbance-feedback policy u_k = u_bar_k + K_k d_{k-1}, d_{-1} = d_bar_0.
struct AffinePolicy {
  std::vector<Vec> u_bar;
  std::vector<Mat> gains;

  int horizon() const { return static_cast<int>(u_bar.size()); }
  static AffinePolicy zeros(int horizon, int n_u, int n_x);
};

/// Stacked x = [x_0; ...; x_T] and u = [u_0; ...; u_{T-1}].
///
/// `controls` holds the commanded controls, before any model saturation.
struct StackedTrajectory {
  Vec states;
  Vec controls;
  int n_x = 0;
  int n_u = 0;

  int horizon() const { return n_u == 0 ? 0 : static_cast<int>(controls.size()) / n_u; }
  auto state(int k) const { return states.segment(k * n_x, n_x); }
  auto state(int k) { return states.segment(k * n_x, n_x); }
  auto control(int k) const { return controls.segment(k * n_u, n_u); }
  auto control(int k) { return controls.segment(k * n_u, n_u); }
};

struct Obstacle {
  Vec center;  // workspace coordinates (2-D for unicycle, 3-D otherwise)
  double radius = 0.0;
};

/// Axis-aligned box around a workspace point the terminal state must reach.
struct GoalRegion {
  Vec center;
  double half_width = 0.0;
};

// Model parameter blocks. Defaults are the published benchmark constants.
struct UnicycleParams {
  double v_max = 3.0;
  double omega_max = 1.5;
};

struct QuadcopterParams {
  double mass = 1.0;
  double gravity = 9.81;
  Eigen::Vector3d inertia{0.02, 0.02, 0.04};
  double thrust_min = 0.0;
  double thrust_max = 15.0;
  double torque_max = 0.5;
};

struct FrankaParams {
  Vec q_min;
  Vec q_max;
  Vec dq_max;
  Vec tau_max;
  Vec damping;
  Vec inertia;
  FrankaParams();
};

/// Everything needed to pose one robust trajectory optimization problem.
struct ScenarioSpec {
  ModelId model = ModelId::unicycle;
  UnicycleParams unicycle;
  QuadcopterParams quadcopter;
  FrankaParams franka;

  int horizon = 1;
  double dt = 0.1;
  Vec x0_bar;

  std::vector<Obstacle> obstacles;
  double obstacle_margin = 0.0;
  std::optional<GoalRegion> goal;

  Vec control_min;
  Vec control_max;
  std::optional<Vec> state_min;
  std::optional<Vec> state_max;

  std::vector<Mat> r_u;  // one n_u x n_u weight per step
  std::vector<Mat> r_k;  // one n_u x n_u weight per step

  UncertaintySet uncertainty;

  /// Optional warm-start controls for the initial nominal (one per step).
  std::vector<Vec> initial_controls;
};

int state_dim(ModelId id);
int control_dim(ModelId id);

/// Default saturation bounds of the model, used when the scenario leaves
/// control limits unset.
std::pair<Vec, Vec> default_control_limits(const ScenarioSpec& spec);

/// Column-major vectorization of each gain block, concatenated in time order.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vec_gains(
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& gains) {
  if (gains.empty()) return {};
  const Eigen::Index rows = gains.front().rows();
  const Eigen::Index cols = gains.front().cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(static_cast<Eigen::Index>(gains.size()) * rows * cols);
  Eigen::Index offset = 0;
  for (const auto& k : gains) {
    if (k.rows() != rows || k.cols() != cols) throw DimensionError("vec_gains: gain blocks differ in shape");
    out.segment(offset, rows * cols) = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(k.data(), rows * cols);
    offset += rows * cols;
  }
  return out;
}

/// Exact inverse of vec_gains.
template <typename Derived>
std::vector<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>> devec_gains(
    const Eigen::MatrixBase<Derived>& kv, int n_u, int n_x) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index block = static_cast<Eigen::Index>(n_u) * n_x;
  if (block == 0 || kv.size() % block != 0) throw DimensionError("devec_gains: length is not a multiple of n_u*n_x");
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> gains;
  gains.reserve(static_cast<std::size_t>(kv.size() / block));
  for (Eigen::Index offset = 0; offset < kv.size(); offset += block) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> seg = kv.segment(offset, block);
    gains.emplace_back(Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(seg.data(), n_u, n_x));
  }
  return gains;
}

struct Violation {
  std::string path;
  std::string message;
};

/// Returns every invariant violation; an empty list means the spec is usable.
std::vector<Violation> validate_scenario(const ScenarioSpec& spec);

/// Throws DataError listing all violations when the spec is invalid.
void require_valid(const ScenarioSpec& spec);

/// Block-diagonal sparse matrix from equally sized dense blocks.
SpMat block_diagonal(const std::vector<Mat>& blocks);

}  // namespace nrto

#endif  // NRTO_CORE_HPP
