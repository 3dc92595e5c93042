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

#include "nrto/config.hpp"
#include "nrto/fit.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace nrto;

namespace {

std::string config_path(const std::string& name) { return std::string(NRTO_CONFIG_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in, "mem.ini");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal = "[model]\nname = unicycle\ndt = 0.1\nx0 = 0 0 0\n\n[horizon]\nT = 4\n";

}  // namespace

TEST_CASE("bundled configs parse") {
  const RunConfig desk = load_config(config_path("unicycle_desk.ini"));
  CHECK(desk.scenario.model == ModelId::unicycle);
  CHECK(desk.scenario.horizon == 15);
  CHECK(desk.scenario.tau == 0.01);
  CHECK(desk.validation.n_random == 1000);

  const RunConfig nominal = load_config(config_path("unicycle_nominal.ini"));
  CHECK(nominal.scenario.horizon == 30);
  CHECK(nominal.scenario.tau == 0.05);

  const RunConfig quad = load_config(config_path("quadcopter.ini"));
  CHECK(quad.scenario.model == ModelId::quadcopter);
  CHECK(quad.scenario.horizon == 10);
  CHECK(quad.scenario.obstacles.empty());
  CHECK(quad.outer.r0 == 1.5);

  const RunConfig franka = load_config(config_path("franka.ini"));
  CHECK(franka.scenario.model == ModelId::franka);
  CHECK(franka.scenario.obstacles.size() == 1);
  const ScenarioSpec spec = franka.scenario.instantiate();
  CHECK(spec.uncertainty.s_metric.rows() == 14 * 11);
}

TEST_CASE("minimal config takes the model defaults") {
  std::istringstream in(kMinimal);
  const RunConfig cfg = parse_config(in, "mem.ini");
  const OuterSettings def = default_outer_settings(ModelId::unicycle);
  CHECK(cfg.outer.r0 == def.r0);
  CHECK(cfg.outer.w_p == def.w_p);
  CHECK(cfg.validation.seed == 7);
  CHECK(cfg.engines.fulladmm.eps_d == cfg.engines.fulladmm.eps_p);
}

TEST_CASE("errors name the line and key") {
  const std::string bad_number = parse_error("[model]\nname = unicycle\ndt = fast\nx0 = 0 0 0\n[horizon]\nT = 4\n");
  CHECK(bad_number.rfind("mem.ini:3: [model] dt:", 0) == 0);

  const std::string unknown = parse_error(std::string(kMinimal) + "[outer]\nspeed = 3\n");
  CHECK(unknown.find("mem.ini:9: [outer] speed: unknown key") != std::string::npos);

  const std::string section = parse_error(std::string(kMinimal) + "[extras]\na = 1\n");
  CHECK(section.find("[extras]: unknown section") != std::string::npos);

  const std::string dims = parse_error("[model]\nname = unicycle\ndt = 0.1\nx0 = 0 0\n[horizon]\nT = 4\n");
  CHECK(dims.find("mem.ini:4: [model] x0: expected 3 numbers, got 2") != std::string::npos);

  const std::string alpha = parse_error(std::string(kMinimal) + "[dr]\nalpha = 1.0\n");
  CHECK(alpha.find("[dr] alpha: must lie in (0, 1)") != std::string::npos);

  CHECK(parse_error("[horizon]\nT = 4\n").find("missing required key 'name'") != std::string::npos);
}

TEST_CASE("missing file is reported with its path") {
  CHECK_THROWS_WITH_AS(load_config("/nonexistent/x.ini"), "cannot open config file '/nonexistent/x.ini'", DataError);
}

TEST_CASE("written configs read back to the same values") {
  for (const char* name : {"unicycle_desk.ini", "quadcopter.ini", "franka.ini"}) {
    const RunConfig a = load_config(config_path(name));
    std::stringstream ss;
    write_config(ss, a);
    const RunConfig b = parse_config(ss, "rt.ini");
    const ScenarioSpec sa = a.scenario.instantiate(), sb = b.scenario.instantiate();
    CHECK(sa.horizon == sb.horizon);
    CHECK(sa.x0_bar == sb.x0_bar);
    CHECK(sa.control_min == sb.control_min);
    CHECK(sa.control_max == sb.control_max);
    CHECK(sa.uncertainty.s_metric == sb.uncertainty.s_metric);
    CHECK(sa.uncertainty.tau == sb.uncertainty.tau);
    CHECK(sa.obstacles.size() == sb.obstacles.size());
    CHECK(a.outer.r0 == b.outer.r0);
    CHECK(a.outer.eps_p == b.outer.eps_p);
    CHECK(a.engines.dr.r_s == b.engines.dr.r_s);
    CHECK(a.engines.fulladmm.rho == b.engines.fulladmm.rho);
    CHECK(a.validation.n_edge == b.validation.n_edge);
  }
}

TEST_CASE("fitted uncertainty section reloads") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.01);
  const int T = 15, nx = 3;
  std::vector<Vec> sets;
  for (int r = 0; r < 20; ++r) {
    Vec z((T + 1) * nx);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = g(rng);
    sets.push_back(z);
  }
  const UncertaintySet fitted = fit_ellipsoid(sets, nx, T);

  std::string text = slurp(config_path("unicycle_desk.ini"));
  const auto start = text.find("[uncertainty]");
  const auto end = text.find("[weights]");
  REQUIRE(start != std::string::npos);
  std::stringstream section;
  write_uncertainty_section(section, fitted, nx, T);
  text = text.substr(0, start) + section.str() + "\n" + text.substr(end);

  std::istringstream in(text);
  const ScenarioSpec spec = parse_config(in, "fitted.ini").scenario.instantiate();
  CHECK(spec.uncertainty.tau == fitted.tau);
  CHECK(spec.uncertainty.s_metric == fitted.s_metric);
}
