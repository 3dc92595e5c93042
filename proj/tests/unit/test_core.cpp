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

#include "nrto/core.hpp"

#include <doctest.h>

#include <random>

using namespace nrto;

namespace {

ScenarioSpec small_unicycle() {
  ScenarioSpec spec;
  spec.model = ModelId::unicycle;
  spec.horizon = 3;
  spec.x0_bar = Vec::Zero(3);
  const auto [lo, hi] = default_control_limits(spec);
  spec.control_min = lo;
  spec.control_max = hi;
  spec.r_u.assign(3, Mat::Identity(2, 2));
  spec.r_k.assign(3, Mat::Identity(2, 2));
  spec.uncertainty = UncertaintySet::identity(12, 0.01);
  return spec;
}

bool has_violation(const ScenarioSpec& spec, const std::string& message) {
  for (const auto& v : validate_scenario(spec))
    if (v.message == message) return true;
  return false;
}

}  // namespace

TEST_CASE("vec_gains stacks each gain column by column") {
  const Mat k = (Mat(2, 2) << 1, 2, 3, 4).finished();
  const Vec v = vec_gains(std::vector<Mat>{k});
  CHECK(v == (Vec(4) << 1, 3, 2, 4).finished());
}

TEST_CASE("vec_gains of zero gains is the zero vector") {
  const Vec v = vec_gains(std::vector<Mat>(3, Mat::Zero(2, 3)));
  CHECK(v.size() == 18);
  CHECK(v.isZero(0.0));
}

TEST_CASE("devec inverts vec and follows the index formula") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Mat k(3, 2);
  for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = g(rng);
  const Vec v = vec_gains(std::vector<Mat>{k});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(v(i + 3 * j) == k(i, j));
  const auto back = devec_gains(v, 3, 2);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == k);
  CHECK_THROWS_AS(devec_gains(Vec::Zero(5), 3, 2), DimensionError);
}

TEST_CASE("validate_scenario accepts a well-formed spec") {
  CHECK(validate_scenario(small_unicycle()).empty());
  CHECK_NOTHROW(require_valid(small_unicycle()));
}

TEST_CASE("validate_scenario rejects tau = 0") {
  ScenarioSpec spec = small_unicycle();
  spec.uncertainty.tau = 0.0;
  CHECK(has_violation(spec, "tau must be positive"));
  CHECK_THROWS_AS(require_valid(spec), DataError);
}

TEST_CASE("validate_scenario rejects an indefinite metric") {
  ScenarioSpec spec = small_unicycle();
  spec.uncertainty.s_metric(1, 1) = -1.0;
  CHECK(has_violation(spec, "s_metric not positive definite"));
}

TEST_CASE("validate_scenario reports per-field problems") {
  ScenarioSpec spec = small_unicycle();
  spec.r_k.pop_back();
  spec.obstacles.push_back({Vec::Zero(3), -1.0});
  const auto v = validate_scenario(spec);
  CHECK(has_violation(spec, "need one R_K per step"));
  CHECK(has_violation(spec, "obstacle radius must be positive"));
  CHECK(v.size() >= 3);
}

TEST_CASE("model names round trip") {
  for (ModelId id : {ModelId::unicycle, ModelId::quadcopter, ModelId::franka})
    CHECK(model_id_from_string(to_string(id)) == id);
  CHECK_THROWS_AS(model_id_from_string("boat"), DataError);
  CHECK(state_dim(ModelId::quadcopter) == 12);
  CHECK(control_dim(ModelId::franka) == 7);
}

TEST_CASE("block_diagonal places blocks on the diagonal") {
  const Mat a = (Mat(1, 2) << 1, 2).finished();
  const Mat b = (Mat(2, 1) << 3, 4).finished();
  const Mat d = Mat(block_diagonal({a, b}));
  const Mat expected = (Mat(3, 3) << 1, 2, 0, 0, 0, 3, 0, 0, 4).finished();
  CHECK(d == expected);
}
