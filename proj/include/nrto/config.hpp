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

#ifndef NRTO_CONFIG_HPP
#define NRTO_CONFIG_HPP

#include "nrto/core.hpp"
#include "nrto/outer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace nrto {

/// Horizon-independent description of a scenario. Per-step weights and the
/// block-diagonal metric are expanded by instantiate(), so sweeps can vary
/// T, tau or the obstacle count on one template.
struct ScenarioTemplate {
  ModelId model = ModelId::unicycle;
  UnicycleParams unicycle;
  QuadcopterParams quadcopter;
  FrankaParams franka;

  int horizon = 15;
  double dt = 0.1;
  Vec x0_bar;
  std::optional<Vec> initial_control;  // repeated over the horizon

  std::vector<Obstacle> obstacles;
  double obstacle_margin = 0.0;
  std::optional<GoalRegion> goal;

  std::optional<Vec> control_min;
  std::optional<Vec> control_max;
  std::optional<Vec> state_min;
  std::optional<Vec> state_max;

  Mat r_u;  // n_u x n_u, used at every step
  Mat r_k;

  // Gamma = I and S = blkdiag(s0, sd, ..., sd).
  Mat s0;
  Mat sd;
  double tau = 0.01;

  ScenarioSpec instantiate() const;
};

struct ValidationConfig {
  int n_random = 1000;
  int n_edge = 1000;
  std::uint64_t seed = 7;
};

struct RunConfig {
  ScenarioTemplate scenario;
  OuterSettings outer;
  EngineSettings engines;
  ValidationConfig validation;
  std::string source;  // file the config came from
};

/// INI config with sections [model] [horizon] [uncertainty] [obstacles]
/// [weights] [outer] [dr] [fulladmm] [validate]. Unset solver keys take the
/// model's published defaults. Errors throw DataError as "source:line: ...".
RunConfig parse_config(std::istream& is, const std::string& source);
RunConfig load_config(const std::string& path);

/// Writes a complete config that parse_config reads back to the same values.
void write_config(std::ostream& os, const RunConfig& config);

/// [uncertainty] section for a fitted set with S = blkdiag(S_0, S_d, ...).
void write_uncertainty_section(std::ostream& os, const UncertaintySet& set, int n_x, int horizon);

}  // namespace nrto

#endif  // NRTO_CONFIG_HPP
