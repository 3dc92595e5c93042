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
#include "nrto/outer.hpp"
#include "nrto/validate.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace nrto;
using namespace nrto::testing;

namespace {

OuterSettings table_settings() {
  OuterSettings s;
  s.r0 = 2.0;
  s.alpha_tr = 0.8;
  s.beta_tr = 1.5;
  s.eta1 = 5.0;
  s.eta2 = 4.0;
  s.r_min = 1e-3;
  s.rho_max = 180.0;
  return s;
}

}  // namespace

TEST_CASE("ratio test accepts and grows the radius") {
  const auto d = accept_step(1.0, 2.0, false, table_settings(), 1.0, 40.0);
  CHECK(d.accepted);
  CHECK(d.r_trust == doctest::Approx(1.5));
  CHECK(d.rho == 40.0);
}

TEST_CASE("ratio test rejects weak or negative reductions") {
  const auto weak = accept_step(0.1, 1.0, false, table_settings(), 1.0, 40.0);
  CHECK_FALSE(weak.accepted);
  CHECK(weak.r_trust == doctest::Approx(0.8));
  CHECK_FALSE(accept_step(-1.0, 1.0, false, table_settings(), 1.0, 40.0).accepted);
  CHECK_FALSE(accept_step(0.0, 1.0, false, table_settings(), 1.0, 40.0).accepted);
}

TEST_CASE("ratio test boundary is 1/eta1") {
  CHECK(accept_step(0.2, 1.0, false, table_settings(), 1.0, 40.0).accepted);
  CHECK_FALSE(accept_step(0.19, 1.0, false, table_settings(), 1.0, 40.0).accepted);
}

TEST_CASE("positive reduction with a non-positive prediction is accepted") {
  CHECK(accept_step(1.0, -0.5, false, table_settings(), 1.0, 40.0).accepted);
}

TEST_CASE("radius and penalty caps") {
  CHECK(accept_step(1.0, 1.0, false, table_settings(), 7.0, 40.0).r_trust == doctest::Approx(8.0));
  CHECK(accept_step(-1.0, 1.0, false, table_settings(), 1e-3, 40.0).r_trust == doctest::Approx(1e-3));
  CHECK(accept_step(1.0, 1.0, true, table_settings(), 1.0, 40.0).rho == 80.0);
  CHECK(accept_step(1.0, 1.0, true, table_settings(), 1.0, 100.0).rho == 180.0);
}

TEST_CASE("settings and engine names") {
  CHECK(engine_from_string("dr") == Engine::dr);
  CHECK(engine_from_string("fulladmm") == Engine::fulladmm);
  CHECK(to_string(Engine::fulladmm) == "fulladmm");
  CHECK_THROWS_AS(engine_from_string("newton"), DataError);
  OuterSettings s;
  s.r0 = 0.0;
  CHECK_THROWS(s.check());
  s = OuterSettings{};
  s.alpha_tr = 1.0;
  CHECK_THROWS(s.check());
}

TEST_CASE("true cost adds the control and gain terms") {
  std::mt19937_64 rng(3);
  const ScenarioSpec spec = random_unicycle_spec(rng, 2, 0, 0.01);
  Vec u(4);
  u << 1.0, 2.0, 0.0, 1.0;
  Vec kv = Vec::Zero(12);
  kv(0) = 2.0;
  // 0.1 (1 + 4) + 0.1 (0 + 1) + |K_0|_F^2 = 0.6 + 4.
  CHECK(true_cost(spec, u, kv) == doctest::Approx(4.6));
}

TEST_CASE("unicycle sanity scenario converges for both engines") {
  RunConfig cfg = load_config(std::string(NRTO_CONFIG_DIR) + "/unicycle_desk.ini");
  cfg.scenario.horizon = 10;
  const ScenarioSpec spec = cfg.scenario.instantiate();
  double rates[2] = {0.0, 0.0};
  int i = 0;
  for (Engine e : {Engine::dr, Engine::fulladmm}) {
    const RunArtifact run = run_nrto(spec, e, cfg.outer, cfg.engines);
    CHECK_MESSAGE(run.converged(), to_string(e), ": ", run.message);
    CHECK(std::isfinite(run.cost));
    CHECK(run.final_violation <= cfg.outer.eps_p);
    CHECK(run.policy.horizon() == 10);
    const ValidationReport rep = validate_policy(spec, run.policy, 500, 500, 7);
    CHECK(rep.rate >= 0.95);
    rates[i++] = rep.rate;
  }
  CHECK(std::abs(rates[0] - rates[1]) <= 0.02);
}
