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

#include "nrto/artifact.hpp"
#include "nrto/config.hpp"

#include <doctest.h>

#include <limits>
#include <sstream>

using namespace nrto;

namespace {

RunArtifact sample_artifact() {
  const RunConfig cfg = load_config(std::string(NRTO_CONFIG_DIR) + "/unicycle_desk.ini");
  RunArtifact a;
  a.spec = cfg.scenario.instantiate();
  a.spec.obstacles.push_back({(Vec(2) << 1.0 / 3.0, 2.0).finished(), 0.25});
  a.engine = Engine::fulladmm;
  a.settings = cfg.outer;
  a.policy = AffinePolicy::zeros(a.spec.horizon, 2, 3);
  for (int k = 0; k < a.spec.horizon; ++k) {
    a.policy.u_bar[static_cast<std::size_t>(k)] << 0.1 * k + 1e-17, -1.0 / 7.0;
    a.policy.gains[static_cast<std::size_t>(k)](1, 2) = 3.14159265358979 * k;
  }
  a.nominal = rollout_nominal(DynamicsModel::from_spec(a.spec), Vec::Constant(2 * a.spec.horizon, 0.2), a.spec.x0_bar,
                              a.spec.dt);
  OuterIterationMetrics m;
  m.iteration = 1;
  m.merit = 2.5;
  m.predicted = std::numeric_limits<double>::infinity();
  m.inner_status = "converged";
  m.accepted = true;
  a.iterations.push_back(m);
  ValidationReport rep;
  rep.n_random = 1;
  rep.n_edge = 1;
  rep.satisfied_random = 1;
  rep.rate = 0.5;
  rep.seed = 7;
  rep.worst_margins = (Vec(2) << -0.1, 0.2).finished();
  rep.samples.push_back({0, "random", true, -0.1, Vec::Constant(3, 0.5)});
  rep.samples.push_back({1, "edge", false, 0.2, Vec::Constant(3, 0.25)});
  a.validation = rep;
  a.status = "converged";
  a.message = "ok";
  a.final_violation = 1.2345678901234567e-5;
  a.cost = 1.0 / 3.0;
  a.wall_seconds = 0.75;
  return a;
}

}  // namespace

TEST_CASE("run.json round trip is exact") {
  const RunArtifact a = sample_artifact();
  std::stringstream ss;
  write_run_json(ss, a);
  const RunArtifact b = read_run_json(ss, "run.json");
  CHECK(b.engine == a.engine);
  CHECK(b.status == a.status);
  CHECK(b.message == a.message);
  CHECK(b.cost == a.cost);
  CHECK(b.final_violation == a.final_violation);
  CHECK(b.spec.horizon == a.spec.horizon);
  CHECK(b.spec.uncertainty.s_metric == a.spec.uncertainty.s_metric);
  CHECK(b.spec.obstacles[0].center == a.spec.obstacles[0].center);
  CHECK(b.settings.r0 == a.settings.r0);
  for (int k = 0; k < a.spec.horizon; ++k) {
    CHECK(b.policy.u_bar[static_cast<std::size_t>(k)] == a.policy.u_bar[static_cast<std::size_t>(k)]);
    CHECK(b.policy.gains[static_cast<std::size_t>(k)] == a.policy.gains[static_cast<std::size_t>(k)]);
  }
  CHECK(b.nominal.states == a.nominal.states);
  REQUIRE(b.iterations.size() == 1);
  CHECK(b.iterations[0].predicted == std::numeric_limits<double>::infinity());
  REQUIRE(b.validation.has_value());
  CHECK(b.validation->rate == 0.5);
  CHECK(b.validation->samples[1].kind == "edge");
  CHECK(b.validation->samples[1].terminal_state == a.validation->samples[1].terminal_state);
}

TEST_CASE("truncated run.json is a data error") {
  const RunArtifact a = sample_artifact();
  std::stringstream ss;
  write_run_json(ss, a);
  std::istringstream half(ss.str().substr(0, ss.str().size() / 2));
  CHECK_THROWS_AS(read_run_json(half, "run.json"), DataError);
}

TEST_CASE("csv headers") {
  const RunArtifact a = sample_artifact();
  std::stringstream traj, gains, rollouts;
  write_trajectory_csv(traj, a.nominal);
  write_gains_csv(gains, a.policy);
  write_rollouts_csv(rollouts, *a.validation);
  std::string line;
  std::getline(traj, line);
  CHECK(line == "k,x0,x1,x2,u0,u1");
  std::getline(gains, line);
  CHECK(line == "k,kv0,kv1,kv2,kv3,kv4,kv5");
  std::getline(rollouts, line);
  CHECK(line == "id,kind,success,worst_margin,xT0,xT1,xT2");

  // Last trajectory row has empty control cells.
  std::string last;
  while (std::getline(traj, line))
    if (!line.empty()) last = line;
  CHECK(last.rfind("15,", 0) == 0);
  CHECK(last.substr(last.size() - 2) == ",,");
}

TEST_CASE("metrics json carries the counts") {
  const RunArtifact a = sample_artifact();
  std::stringstream ss;
  write_metrics_json(ss, *a.validation);
  const std::string text = ss.str();
  CHECK(text.find("\"rate\"") != std::string::npos);
  CHECK(text.find("\"n_edge\"") != std::string::npos);
}
