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

#include "nrto/validate.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace nrto;
using namespace nrto::testing;

namespace {

UncertaintySet spd_set(std::mt19937_64& rng, int dim, double tau) {
  std::normal_distribution<double> g;
  Mat m(dim, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  UncertaintySet set;
  set.gamma = Mat::Identity(dim, dim);
  set.s_metric = m * m.transpose() / dim + Mat::Identity(dim, dim);
  set.tau = tau;
  return set;
}

}  // namespace

TEST_CASE("interior samples stay inside the ellipsoid") {
  std::mt19937_64 rng(1);
  const UncertaintySet set = spd_set(rng, 6, 0.3);
  for (const Vec& z : sample_interior_z(set, 2000, 11)) CHECK(mahalanobis(z, set.s_metric) <= set.tau * (1.0 + 1e-12));
}

TEST_CASE("one-dimensional interior samples are uniform") {
  UncertaintySet set;
  set.gamma = Mat::Identity(1, 1);
  set.s_metric = Mat::Constant(1, 1, 4.0);
  set.tau = 1.0;  // interval [-0.5, 0.5]
  auto zs = sample_interior_z(set, 5000, 3);
  std::vector<double> x;
  for (const auto& z : zs) x.push_back(z(0));
  std::sort(x.begin(), x.end());
  double ks = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double cdf = x[i] + 0.5;
    ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(ks < 1.63 / std::sqrt(n));
}

TEST_CASE("interior energy matches the uniform-ball mean") {
  std::mt19937_64 rng(2);
  const int d = 8;
  const UncertaintySet set = spd_set(rng, d, 2.0);
  double mean = 0.0;
  const auto zs = sample_interior_z(set, 20000, 5);
  for (const auto& z : zs) mean += mahalanobis(z, set.s_metric) / set.tau;
  mean /= static_cast<double>(zs.size());
  CHECK(mean == doctest::Approx(static_cast<double>(d) / (d + 2)).epsilon(0.01));
}

TEST_CASE("sampling is deterministic in the seed") {
  std::mt19937_64 rng(3);
  const UncertaintySet set = spd_set(rng, 4, 1.0);
  const auto a = sample_interior_z(set, 50, 9), b = sample_interior_z(set, 50, 9), c = sample_interior_z(set, 50, 10);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(a[0] != c[0]);
}

TEST_CASE("edge samples lie on the boundary") {
  std::mt19937_64 rng(4);
  const ScenarioSpec spec = random_unicycle_spec(rng, 5, 2, 0.02);
  const DynamicsModel m = DynamicsModel::from_spec(spec);
  const auto sub = build_subproblem(spec, m, random_nominal(rng, spec), 1.0);
  std::normal_distribution<double> g;
  Vec kv(sub.n_kv());
  for (Eigen::Index i = 0; i < kv.size(); ++i) kv(i) = 0.1 * g(rng);
  for (const Vec& z : sample_edge_z(spec.uncertainty, sub, kv, 500, 8))
    CHECK(std::abs(mahalanobis(z, spec.uncertainty.s_metric) - spec.uncertainty.tau) <= 1e-9 * spec.uncertainty.tau);
}

TEST_CASE("worst-case directions attain the robust margin") {
  std::mt19937_64 rng(5);
  const ScenarioSpec spec = random_unicycle_spec(rng, 4, 2, 0.03);
  const DynamicsModel m = DynamicsModel::from_spec(spec);
  const auto sub = build_subproblem(spec, m, random_nominal(rng, spec), 1.0);
  std::normal_distribution<double> g;
  Vec kv(sub.n_kv());
  for (Eigen::Index i = 0; i < kv.size(); ++i) kv(i) = 0.2 * g(rng);
  const Mat gains = gain_block_matrix(devec_gains(kv, sub.n_u, sub.n_x), sub.n_x);
  const Mat closed = sub.sens.f_zeta + sub.sens.f_u * gains;
  const Vec margins = sub.robust_margins(kv);
  const auto dirs = worst_case_directions(sub, kv);
  REQUIRE(static_cast<int>(dirs.size()) == sub.n_g());
  for (int j = 0; j < sub.n_g(); ++j) {
    // Linear response of constraint j to zeta.
    const Vec c = closed.transpose() * sub.grad_x.col(j) + gains.transpose() * sub.grad_u.col(j);
    const Vec z = std::sqrt(spec.uncertainty.tau) * dirs[static_cast<std::size_t>(j)];
    CHECK(mahalanobis(z, spec.uncertainty.s_metric) == doctest::Approx(spec.uncertainty.tau));
    CHECK(c.dot(z) == doctest::Approx(margins(j)).epsilon(1e-9));
  }
}

TEST_CASE("feasible nominal under negligible uncertainty validates fully") {
  std::mt19937_64 rng(6);
  ScenarioSpec spec = random_unicycle_spec(rng, 6, 0, 1e-14);
  const auto nominal = random_nominal(rng, spec);
  AffinePolicy policy = AffinePolicy::zeros(6, 2, 3);
  for (int k = 0; k < 6; ++k) policy.u_bar[static_cast<std::size_t>(k)] = nominal.control(k);
  const ValidationReport ok = validate_policy(spec, policy, 100, 100, 1);
  CHECK(ok.rate == 1.0);
  CHECK(ok.satisfied_random == 100);
  CHECK(ok.samples.size() == 200);

  policy.u_bar[0] = spec.control_max * 2.0;
  const ValidationReport bad = validate_policy(spec, policy, 100, 100, 1);
  CHECK(bad.rate == 0.0);
  CHECK(bad.worst_margins.maxCoeff() > 0.0);
}

TEST_CASE("validation is reproducible") {
  std::mt19937_64 rng(7);
  const ScenarioSpec spec = random_unicycle_spec(rng, 5, 2, 0.05);
  const auto nominal = random_nominal(rng, spec);
  AffinePolicy policy = AffinePolicy::zeros(5, 2, 3);
  for (int k = 0; k < 5; ++k) policy.u_bar[static_cast<std::size_t>(k)] = nominal.control(k);
  const auto a = validate_policy(spec, policy, 200, 200, 42), b = validate_policy(spec, policy, 200, 200, 42);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].success == b.samples[i].success);
    CHECK(a.samples[i].worst_margin == b.samples[i].worst_margin);
  }
}

TEST_CASE("median and log-log slope") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({}) == 0.0);
  std::vector<double> n, t;
  for (double x : {8.0, 32.0, 128.0, 512.0}) {
    n.push_back(x);
    t.push_back(3e-6 * std::pow(x, 1.5));
  }
  CHECK(loglog_slope(n, t) == doctest::Approx(1.5));
}
