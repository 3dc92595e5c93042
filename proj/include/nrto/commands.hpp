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

#ifndef NRTO_COMMANDS_HPP
#define NRTO_COMMANDS_HPP

#include "nrto/config.hpp"
#include "nrto/outer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nrto {

/// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct CommandContext {
  std::ostream* out = nullptr;  // progress and summaries
  std::ostream* err = nullptr;  // error messages
  bool trace = false;           // also write trace.csv (one row per outer iteration)
};

/// Writes run.json, trajectory.csv and gains.csv into out_dir.
int cmd_solve(const std::string& config_path, std::optional<Engine> engine, const std::string& out_dir,
              const CommandContext& ctx);

/// Reads run.json and writes rollouts.csv and metrics.json next to it.
/// Unset counts and seed fall back to 1000, 1000 and 7.
int cmd_validate(const std::string& run_path, std::optional<int> n_random, std::optional<int> n_edge,
                 std::optional<std::uint64_t> seed, const CommandContext& ctx);

enum class SweepAxis { horizon, tau, obstacles };
SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

/// One solve and validate per (value, engine) in out_dir/<axis>_<value>_<engine>,
/// at most `jobs` at a time. The obstacles axis keeps the first n obstacles
/// of the config. Writes out_dir/sweep.csv; a failing row does not stop the sweep.
int cmd_sweep(const std::string& config_path, SweepAxis axis, const std::vector<double>& values,
              const std::vector<Engine>& engines, const std::string& out_dir, int jobs,
              std::optional<std::uint64_t> seed, const CommandContext& ctx);

/// Repeated solves without validation; prints median phase timings.
int cmd_benchmark(const std::string& config_path, std::optional<Engine> engine, int repeats,
                  const CommandContext& ctx);

/// Fits the uncertainty set from every *.csv rollout log in logs_dir. The
/// config supplies the model and dt. Writes an [uncertainty] section.
int cmd_fit(const std::string& config_path, const std::string& logs_dir, const std::string& out_path,
            const CommandContext& ctx);

}  // namespace nrto

#endif  // NRTO_COMMANDS_HPP
