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

#include "nrto/solver_fulladmm.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace nrto;
using namespace nrto::testing;

namespace {

// T = 1, n_u = 1, n_x = 2, one constraint with A_hat = I and Q_v = 2I.
LinearizedSubproblem hand_instance(const Vec& b_hat) {
  return hand_subproblem(1, 2, Mat::Constant(1, 1, 1.0), b_hat, Vec::Constant(1, -1.0), 1.0);
}

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }

LinearizedSubproblem random_subproblem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ScenarioSpec spec = random_unicycle_spec(rng, 5, 2, 0.05);
  const DynamicsModel m = DynamicsModel::from_spec(spec);
  return build_subproblem(spec, m, random_nominal(rng, spec), 0.5);
}

}  // namespace

TEST_CASE("precomputed operators of the hand instance") {
  const LinearizedSubproblem sub = hand_instance(vec2(3.0, -2.0));
  FullAdmmSettings s;
  const PrecomputedOperators ops(sub, 2.0, s);
  CHECK(ops.direct());
  CHECK((ops.solve_m(vec2(4.0, 8.0)) - vec2(1.0, 2.0)).norm() < 1e-15);  // M = I/4
  CHECK((ops.apply_m_cal(vec2(2.0, 6.0)) - vec2(1.0, 3.0)).norm() < 1e-15);  // Mcal = I/2
  CHECK((ops.apply_m_bar(vec2(2.0, 6.0).reshaped(2, 1)) - vec2(1.0, 3.0)).norm() < 1e-15);  // Mbar = I/2
  CHECK((ops.q() - vec2(-1.5, 1.0)).norm() < 1e-15);  // q = -b_hat / 2
  const Vec k = vec2(0.4, 0.2);
  const Mat nu = vec2(1.0, -1.0).reshaped(2, 1);
  CHECK((ops.recursion(k, nu) - (ops.q() + ops.apply_m_cal(k) + ops.apply_m_bar(nu))).norm() < 1e-15);
  CHECK(ops.builds() == 1);
}

TEST_CASE("block 1 projects each constraint column") {
  const LinearizedSubproblem sub = hand_instance(vec2(3.0, 4.0));
  FullAdmmState st = FullAdmmState::zeros(sub);
  block1_project(st, sub);
  CHECK(st.p_tilde(0) == doctest::Approx(2.5));
  CHECK((st.nu.col(0) - vec2(1.5, 2.0)).norm() < 1e-15);

  st = FullAdmmState::zeros(sub);
  st.p(0) = 6.0;  // already inside
  block1_project(st, sub);
  CHECK(st.p_tilde(0) == 6.0);
  CHECK((st.nu.col(0) - vec2(3.0, 4.0)).norm() == 0.0);
}

TEST_CASE("dual update accumulates the coupling residuals") {
  const LinearizedSubproblem sub = hand_instance(vec2(3.0, 4.0));
  FullAdmmState st = FullAdmmState::zeros(sub);
  st.p(0) = 1.0;
  st.p_tilde(0) = 2.5;
  st.k_v = vec2(1.0, -1.0);
  st.nu.col(0) = vec2(1.5, 2.0);
  dual_update(st, sub);
  CHECK(st.lambda_p(0) == doctest::Approx(-1.5));
  CHECK((st.lambda_nu.col(0) - vec2(2.5, 1.0)).norm() < 1e-15);
}

TEST_CASE("closed-form k_v step keeps the stationarity invariant") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const LinearizedSubproblem sub = random_subproblem(seed);
    FullAdmmSettings s;
    s.rho = 10.0;
    s.max_iters = 30;
    s.slack_weight = 10.0;
    double worst = 0.0;
    const auto res = solve_fulladmm(sub, s, [&](int, const FullAdmmState& st) {
      const double scale = 1.0 + (sub.cost.q_v * st.k_v).norm();
      worst = std::max(worst, stationarity_residual(st, sub, s.rho) / scale);
    });
    CHECK(res.iterations > 0);
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("matrix-free M solve tracks the direct one") {
  const LinearizedSubproblem sub = random_subproblem(4);
  FullAdmmSettings direct, iterative;
  iterative.direct_threshold = 0;
  iterative.pcg_tol = 1e-12;
  iterative.pcg_iters = 2000;
  const PrecomputedOperators a(sub, 10.0, direct), b(sub, 10.0, iterative);
  CHECK(a.direct());
  CHECK_FALSE(b.direct());
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Vec rhs(sub.n_kv());
  for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs(i) = g(rng);
  const Vec x = a.solve_m(rhs);
  CHECK((b.solve_m(rhs) - x).norm() <= 1e-8 * x.norm());
}

TEST_CASE("residual histories and convergence") {
  const LinearizedSubproblem sub = random_subproblem(6);
  FullAdmmSettings s;
  s.max_iters = 2000;
  s.eps_p = 1e-6;
  s.eps_d = 1e-6;
  s.slack_weight = 10.0;
  const auto res = solve_fulladmm(sub, s);
  CHECK(res.status == DrStatus::converged);
  CHECK(res.r_p.size() == static_cast<std::size_t>(res.iterations));
  CHECK(res.r_p.back() <= 1e-6);
  CHECK(res.r_d.back() <= 1e-6);
}

TEST_CASE("rho must be positive") {
  const LinearizedSubproblem sub = hand_instance(vec2(1.0, 1.0));
  CHECK_THROWS_AS(PrecomputedOperators(sub, 0.0, FullAdmmSettings{}), SolverError);
}
