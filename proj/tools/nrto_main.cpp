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

#include "nrto/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

int main(int argc, char** argv) {
  using namespace nrto;

  CLI::App app{"Robust trajectory optimization with affine disturbance feedback"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string engine_name;
  std::uint64_t seed = 0;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool trace = false;
  app.add_option("--engine", engine_name, "Inner engine")->check(CLI::IsMember({"dr", "fulladmm"}));
  auto* seed_opt = app.add_option("--seed", seed, "Validation seed");
  app.add_option("--jobs", jobs, "Concurrent sweep runs")->check(CLI::PositiveNumber);
  app.add_flag("--trace", trace, "Write trace.csv with per-iteration metrics");

  std::string config, out_dir = ".", run_path, logs_dir, out_path, axis_name;
  int n_random = 1000, n_edge = 1000, repeats = 5;
  std::vector<double> values;

  auto* solve = app.add_subcommand("solve", "Solve a scenario config");
  solve->add_option("config", config, "Scenario config (.ini)")->required();
  solve->add_option("-o,--out", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "Monte Carlo validation of a solved run");
  validate->add_option("run", run_path, "run.json or its directory")->required();
  validate->add_option("--n-random", n_random, "Interior samples")->check(CLI::NonNegativeNumber);
  validate->add_option("--n-edge", n_edge, "Boundary samples")->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep", "Vary one factor and solve + validate per value");
  sweep->add_option("config", config, "Scenario config (.ini)")->required();
  sweep->add_option("axis", axis_name, "horizon | tau | obstacles")
      ->required()
      ->check(CLI::IsMember({"horizon", "tau", "obstacles"}));
  sweep->add_option("values", values, "Values of the swept factor")->required();
  sweep->add_option("-o,--out", out_dir, "Sweep directory");

  auto* bench = app.add_subcommand("benchmark", "Median phase timings over repeated solves");
  bench->add_option("config", config, "Scenario config (.ini)")->required();
  bench->add_option("--repeats", repeats, "Number of solves")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "Fit the uncertainty set from rollout logs");
  fit->add_option("config", config, "Scenario config supplying the model and dt")->required();
  fit->add_option("logs", logs_dir, "Directory of rollout CSV logs")->required();
  fit->add_option("-o,--out", out_path, "Output file for the [uncertainty] section")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  CommandContext ctx;
  ctx.out = &std::cout;
  ctx.err = &std::cerr;
  ctx.trace = trace;
  std::optional<Engine> engine;
  if (!engine_name.empty()) engine = engine_from_string(engine_name);
  std::optional<std::uint64_t> seed_value;
  if (*seed_opt) seed_value = seed;

  if (*solve) return cmd_solve(config, engine, out_dir, ctx);
  if (*validate) return cmd_validate(run_path, n_random, n_edge, seed_value, ctx);
  if (*sweep) {
    const std::vector<Engine> engines =
        engine ? std::vector<Engine>{*engine} : std::vector<Engine>{Engine::dr, Engine::fulladmm};
    return cmd_sweep(config, sweep_axis_from_string(axis_name), values, engines, out_dir, jobs, seed_value, ctx);
  }
  if (*bench) return cmd_benchmark(config, engine, repeats, ctx);
  if (*fit) return cmd_fit(config, logs_dir, out_path, ctx);
  return kExitError;
}
