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

#ifndef NRTO_FIT_HPP
#define NRTO_FIT_HPP

#include "nrto/core.hpp"
#include "nrto/dynamics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nrto {

/// One logged execution on the solver grid.
struct RolloutLog {
  Vec x0_commanded;                 // x_0^cmd
  std::vector<Vec> measured_states;  // x_0^meas ... x_T^meas
  std::vector<Vec> applied_controls;  // u_0 ... u_{T-1}
  double dt = 0.0;

  int horizon() const { return static_cast<int>(applied_controls.size()); }
  void check(int n_x, int n_u) const;
};

/// Wraps an angle to [-pi, pi].
double wrap_angle(double a);

/// zeta = [d_0; d_1; ...; d_T] with d_0 = x_0^meas - x_0^cmd and
/// d_{k+1} = x_{k+1}^meas - f(x_k^meas, u_k). Angle components are wrapped.
Vec extract_residuals(const RolloutLog& log, const DynamicsModel& model);

/// Builds a log by rolling the model forward from x0_cmd + d_0 under the
/// given controls and adding the process residuals. Inverse of
/// extract_residuals up to angle wrapping.
RolloutLog inject_residuals(const DynamicsModel& model, const Vec& x0_commanded, const std::vector<Vec>& controls,
                            const Vec& zeta, double dt);

struct FitSettings {
  double margin = 0.1;      // tau = max energy * (1 + margin)
  double tau_floor = 1e-10;
};

/// Gamma = I, S = blkdiag(S_0, S_d, ..., S_d) with S_0, S_d the inverses of
/// the regularized start and pooled process covariances; tau from the
/// largest Mahalanobis energy among the rollouts.
UncertaintySet fit_ellipsoid(const std::vector<Vec>& residual_sets, int n_x, int horizon,
                             const FitSettings& settings = {});

/// zeta' S zeta (Gamma = I convention).
double mahalanobis_energy(const Vec& zeta, const UncertaintySet& set);

/// CSV with header k,x0..,u0..; the k = -1 row holds x_0^cmd with empty
/// control cells, rows k = 0..T hold x_k^meas and (for k < T) u_k.
RolloutLog read_rollout_csv(std::istream& is, const std::string& source, int n_x, int n_u, double dt);
void write_rollout_csv(std::ostream& os, const RolloutLog& log);

}  // namespace nrto

#endif  // NRTO_FIT_HPP
