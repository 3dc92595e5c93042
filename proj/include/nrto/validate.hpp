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

#ifndef NRTO_VALIDATE_HPP
#define NRTO_VALIDATE_HPP

#include "nrto/core.hpp"
#include "nrto/dynamics.hpp"
#include "nrto/linearize.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nrto {

struct SampleOutcome {
  int id = 0;
  std::string kind;  // "random" or "edge"
  bool success = false;
  double worst_margin = 0.0;  // largest nonlinear constraint value along the rollout
  Vec terminal_state;
};

struct ValidationReport {
  int n_random = 0;
  int n_edge = 0;
  int satisfied_random = 0;
  int satisfied_edge = 0;
  double rate = 0.0;
  std::uint64_t seed = 0;
  Vec worst_margins;  // per constraint, max over all samples
  std::vector<SampleOutcome> samples;
};

/// Rollouts succeed when no constraint value exceeds this.
inline constexpr double kViolationTolerance = 1e-9;

/// z uniform (by volume) in {z' S z <= tau}.
std::vector<Vec> sample_interior_z(const UncertaintySet& set, int n, std::uint64_t seed);
/// Gamma z for the interior samples.
std::vector<Vec> sample_interior(const UncertaintySet& set, int n, std::uint64_t seed);

/// Maximizer direction of each constraint's uncertain term, Psi' v_j / |v_j|
/// with v_j = A_hat_j k_v + b_hat_j. It has unit S-norm; scaling by
/// sqrt(tau) gives the worst-case boundary point.
std::vector<Vec> worst_case_directions(const LinearizedSubproblem& sub, const Vec& k_v);

/// Boundary samples: convex combinations of two randomly chosen worst-case
/// points, rescaled onto z' S z = tau. Falls back to random boundary
/// directions when there are no constraints.
std::vector<Vec> sample_edge_z(const UncertaintySet& set, const LinearizedSubproblem& sub, const Vec& k_v, int n,
                               std::uint64_t seed);
std::vector<Vec> sample_edge(const UncertaintySet& set, const LinearizedSubproblem& sub, const Vec& k_v, int n,
                             std::uint64_t seed);

/// Rolls out every disturbance under the true dynamics and checks every
/// constraint at every knot. Rollouts run in parallel; aggregation order is fixed.
ValidationReport evaluate(const ScenarioSpec& spec, const AffinePolicy& policy, const std::vector<Vec>& random,
                          const std::vector<Vec>& edge);

/// Samples and evaluates in one call; the policy's zero-disturbance rollout
/// supplies the linearization for the edge directions.
ValidationReport validate_policy(const ScenarioSpec& spec, const AffinePolicy& policy, int n_random, int n_edge,
                                 std::uint64_t seed);

double mahalanobis(const Vec& z, const Mat& s_metric);

struct PhaseTimings {
  std::vector<double> linearize;
  std::vector<double> inner;
  std::vector<double> projection;
  std::vector<double> total;
};

double median(std::vector<double> v);

/// Median time of the batched cone projection stage for n_g synthetic
/// soc blocks of size 1 + n_z.
double time_projection_stage(int n_g, int n_z, int repeats, std::uint64_t seed);

/// Least-squares slope of log(time) against log(n_g).
double loglog_slope(const std::vector<double>& n_g, const std::vector<double>& seconds);

}  // namespace nrto

#endif  // NRTO_VALIDATE_HPP
