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

#include "nrto/artifact.hpp"
#include "nrto/fit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace nrto {

namespace fs = std::filesystem;

namespace {

constexpr int kDefaultSamples = 1000;
constexpr std::uint64_t kDefaultSeed = 7;

std::ostream& out_of(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }
std::ostream& err_of(const CommandContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  return os;
}

void write_trace(const fs::path& path, const RunArtifact& art) {
  auto os = open_out(path);
  os << "iteration,merit,candidate_merit,predicted,actual,violation,step_inf,r_trust,rho,inner_iterations,"
        "inner_status,accepted,t_linearize,t_inner,t_projection\n"
     << std::setprecision(17);
  for (const auto& m : art.iterations)
    os << m.iteration << ',' << m.merit << ',' << m.candidate_merit << ',' << m.predicted << ',' << m.actual << ','
       << m.violation << ',' << m.step_inf << ',' << m.r_trust << ',' << m.rho << ',' << m.inner_iterations << ','
       << m.inner_status << ',' << (m.accepted ? 1 : 0) << ',' << m.t_linearize << ',' << m.t_inner << ','
       << m.t_projection << '\n';
}

void write_solve_outputs(const fs::path& dir, const RunArtifact& art, bool trace) {
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "run.json");
    write_run_json(os, art);
  }
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, art.nominal);
  }
  {
    auto os = open_out(dir / "gains.csv");
    write_gains_csv(os, art.policy);
  }
  if (trace) write_trace(dir / "trace.csv", art);
}

void write_validation_outputs(const fs::path& dir, const ValidationReport& report) {
  {
    auto os = open_out(dir / "rollouts.csv");
    write_rollouts_csv(os, report);
  }
  auto os = open_out(dir / "metrics.json");
  write_metrics_json(os, report);
}

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

ScenarioTemplate apply_axis(ScenarioTemplate sc, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::horizon:
      if (value < 1 || value != std::floor(value)) throw DataError("horizon must be a positive integer");
      sc.horizon = static_cast<int>(value);
      break;
    case SweepAxis::tau:
      if (!(value > 0.0)) throw DataError("tau must be positive");
      sc.tau = value;
      break;
    case SweepAxis::obstacles: {
      if (value < 0 || value != std::floor(value)) throw DataError("obstacle count must be a non-negative integer");
      const auto n = static_cast<std::size_t>(value);
      if (n > sc.obstacles.size())
        throw DataError("config defines only " + std::to_string(sc.obstacles.size()) + " obstacles");
      sc.obstacles.resize(n);
      break;
    }
  }
  return sc;
}

struct SweepRow {
  double value = 0.0;
  Engine engine = Engine::dr;
  std::string status = "error";
  double success_pct = 0.0;
  double seconds = 0.0;
  std::string message;
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

int cmd_solve(const std::string& config_path, std::optional<Engine> engine, const std::string& out_dir,
              const CommandContext& ctx) {
  try {
    const RunConfig cfg = load_config(config_path);
    const ScenarioSpec spec = cfg.scenario.instantiate();
    const Engine eng = engine.value_or(Engine::dr);
    const RunArtifact art = run_nrto(spec, eng, cfg.outer, cfg.engines);
    write_solve_outputs(out_dir, art, ctx.trace);
    out_of(ctx) << std::setprecision(6) << "status=" << art.status << " engine=" << to_string(eng)
                << " outer_iterations=" << art.iterations.size() << " cost=" << art.cost
                << " violation=" << art.final_violation << " time_s=" << art.wall_seconds << '\n';
    if (!art.converged()) {
      err_of(ctx) << "not converged: " << art.message << '\n';
      return kExitNotConverged;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err_of(ctx) << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_validate(const std::string& run_path, std::optional<int> n_random, std::optional<int> n_edge,
                 std::optional<std::uint64_t> seed, const CommandContext& ctx) {
  try {
    fs::path path(run_path);
    if (fs::is_directory(path)) path /= "run.json";
    const RunArtifact art = load_run_json(path.string());
    if (!art.converged()) {
      err_of(ctx) << "error: " << path.string() << " holds a non-converged run; nothing to validate\n";
      return kExitNotConverged;
    }
    const int nr = n_random.value_or(kDefaultSamples), ne = n_edge.value_or(kDefaultSamples);
    if (nr < 0 || ne < 0) throw DataError("sample counts must be non-negative");
    const ValidationReport report = validate_policy(art.spec, art.policy, nr, ne, seed.value_or(kDefaultSeed));
    write_validation_outputs(path.parent_path().empty() ? fs::path(".") : path.parent_path(), report);
    out_of(ctx) << std::setprecision(6) << "rate=" << report.rate << " random=" << report.satisfied_random << "/"
                << report.n_random << " edge=" << report.satisfied_edge << "/" << report.n_edge << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err_of(ctx) << "error: " << e.what() << '\n';
    return kExitError;
  }
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "horizon") return SweepAxis::horizon;
  if (name == "tau") return SweepAxis::tau;
  if (name == "obstacles") return SweepAxis::obstacles;
  throw DataError("unknown sweep axis '" + name + "' (expected horizon, tau or obstacles)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::horizon: return "horizon";
    case SweepAxis::tau: return "tau";
    case SweepAxis::obstacles: return "obstacles";
  }
  return "unknown";
}

int cmd_sweep(const std::string& config_path, SweepAxis axis, const std::vector<double>& values,
              const std::vector<Engine>& engines, const std::string& out_dir, int jobs,
              std::optional<std::uint64_t> seed, const CommandContext& ctx) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (values.empty()) throw DataError("sweep needs at least one value");
    if (engines.empty()) throw DataError("sweep needs at least one engine");
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    err_of(ctx) << "error: " << e.what() << '\n';
    return kExitError;
  }

  std::vector<SweepRow> rows;
  for (double v : values)
    for (Engine e : engines) {
      SweepRow row;
      row.value = v;
      row.engine = e;
      rows.push_back(row);
    }

  const std::uint64_t sweep_seed = seed.value_or(cfg.validation.seed);
  std::mutex log_mutex;
  auto run_row = [&](SweepRow& row) {
    const fs::path dir =
        fs::path(out_dir) / (to_string(axis) + "_" + format_value(row.value) + "_" + to_string(row.engine));
    try {
      const ScenarioSpec spec = apply_axis(cfg.scenario, axis, row.value).instantiate();
      require_valid(spec);
      RunArtifact art = run_nrto(spec, row.engine, cfg.outer, cfg.engines);
      row.seconds = art.wall_seconds;
      row.status = art.status;
      row.message = art.message;
      if (art.converged()) {
        art.validation = validate_policy(spec, art.policy, cfg.validation.n_random, cfg.validation.n_edge, sweep_seed);
        row.success_pct = 100.0 * art.validation->rate;
      }
      write_solve_outputs(dir, art, ctx.trace);
      if (art.validation) write_validation_outputs(dir, *art.validation);
    } catch (const std::exception& e) {
      row.status = "error";
      row.message = e.what();
    }
    const std::lock_guard lock(log_mutex);
    out_of(ctx) << std::setprecision(6) << to_string(axis) << "=" << format_value(row.value)
                << " engine=" << to_string(row.engine) << " status=" << row.status
                << " success_pct=" << row.success_pct << " time_s=" << row.seconds << '\n';
  };

  std::atomic<std::size_t> next{0};
  const auto workers = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(rows.size())));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) run_row(rows[i]);
      });
  }

  try {
    auto os = open_out(fs::path(out_dir) / "sweep.csv");
    os << "setting,engine,success_pct,time_s,status,message\n" << std::setprecision(17);
    for (const auto& r : rows)
      os << format_value(r.value) << ',' << to_string(r.engine) << ',' << r.success_pct << ',' << r.seconds << ','
         << r.status << ',' << csv_escape(r.message) << '\n';
  } catch (const std::exception& e) {
    err_of(ctx) << "error: " << e.what() << '\n';
    return kExitError;
  }
  const bool all_ok = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status == "converged"; });
  return all_ok ? kExitOk : kExitNotConverged;
}

int cmd_benchmark(const std::string& config_path, std::optional<Engine> engine, int repeats,
                  const CommandContext& ctx) {
  try {
    if (repeats < 1) throw DataError("repeats must be at least 1");
    const RunConfig cfg = load_config(config_path);
    const Engine eng = engine.value_or(Engine::dr);
    const BenchmarkSummary s = benchmark(cfg.scenario.instantiate(), eng, cfg.outer, cfg.engines, repeats);
    out_of(ctx) << std::setprecision(6) << "engine=" << to_string(eng) << " repeats=" << repeats
                << " median_total_s=" << s.median_total << " median_linearize_s=" << s.median_linearize
                << " median_inner_s=" << s.median_inner << " median_projection_s=" << s.median_projection << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err_of(ctx) << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_fit(const std::string& config_path, const std::string& logs_dir, const std::string& out_path,
            const CommandContext& ctx) {
  try {
    const RunConfig cfg = load_config(config_path);
    const ScenarioSpec spec = cfg.scenario.instantiate();
    const DynamicsModel model = DynamicsModel::from_spec(spec);
    if (!fs::is_directory(logs_dir)) throw DataError("'" + logs_dir + "' is not a directory");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(logs_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.size() < 2)
      throw DataError("'" + logs_dir + "' holds " + std::to_string(files.size()) + " rollout logs, need at least 2");

    std::vector<Vec> residuals;
    int horizon = -1;
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw DataError("cannot open '" + f.string() + "'");
      const RolloutLog log = read_rollout_csv(in, f.string(), model.nx, model.nu, spec.dt);
      if (horizon >= 0 && log.horizon() != horizon)
        throw DataError(f.string() + ": horizon " + std::to_string(log.horizon()) + " differs from " +
                        std::to_string(horizon));
      horizon = log.horizon();
      residuals.push_back(extract_residuals(log, model));
    }
    const UncertaintySet set = fit_ellipsoid(residuals, model.nx, horizon);
    auto os = open_out(out_path);
    write_uncertainty_section(os, set, model.nx, horizon);
    out_of(ctx) << std::setprecision(6) << "logs=" << files.size() << " horizon=" << horizon << " tau=" << set.tau
                << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err_of(ctx) << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace nrto
