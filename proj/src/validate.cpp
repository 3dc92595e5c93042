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

#include "nrto/cone.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

namespace nrto {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Vec gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec w(n);
  for (int i = 0; i < n; ++i) w(i) = normal(rng);
  return w;
}

Vec unit_direction(std::mt19937_64& rng, int n) {
  Vec w = gaussian(rng, n);
  double norm = w.norm();
  while (!(norm > 0.0)) {
    w = gaussian(rng, n);
    norm = w.norm();
  }
  return w / norm;
}

std::vector<Vec> map_gamma(const UncertaintySet& set, const std::vector<Vec>& zs) {
  std::vector<Vec> out;
  out.reserve(zs.size());
  for (const auto& z : zs) out.push_back(set.gamma * z);
  return out;
}

Vec rescale_to_boundary(const Vec& z, const Mat& s_metric, double tau) {
  const double e = mahalanobis(z, s_metric);
  return z * std::sqrt(tau / e);
}

}  // namespace

double mahalanobis(const Vec& z, const Mat& s_metric) {
  if (z.size() != s_metric.rows()) throw DimensionError("mahalanobis: dimension mismatch");
  return z.dot(s_metric * z);
}

std::vector<Vec> sample_interior_z(const UncertaintySet& set, int n, std::uint64_t seed) {
  const int nz = set.nz();
  // S^{-1/2}-type map: Psi' sends the unit ball onto {z' S z <= 1}.
  const Mat psi_t = psi_from_metric(set.s_metric).transpose();
  auto rng = make_rng(seed, 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    const Vec dir = unit_direction(rng, nz);
    const double radius = std::sqrt(set.tau) * std::pow(unif(rng), 1.0 / nz);
    out.push_back(radius * (psi_t * dir));
  }
  return out;
}

std::vector<Vec> sample_interior(const UncertaintySet& set, int n, std::uint64_t seed) {
  return map_gamma(set, sample_interior_z(set, n, seed));
}

std::vector<Vec> worst_case_directions(const LinearizedSubproblem& sub, const Vec& k_v) {
  std::vector<Vec> out;
  if (sub.n_g() == 0) return out;
  const Mat v = sub.a_hat.apply(k_v) + sub.b_hat;
  const Mat psi_t = sub.psi.transpose();
  for (int j = 0; j < sub.n_g(); ++j) {
    const double norm = v.col(j).norm();
    if (norm > 0.0) out.push_back(psi_t * (v.col(j) / norm));
  }
  return out;
}

std::vector<Vec> sample_edge_z(const UncertaintySet& set, const LinearizedSubproblem& sub, const Vec& k_v, int n,
                               std::uint64_t seed) {
  const int nz = set.nz();
  const double scale = std::sqrt(set.tau);
  std::vector<Vec> dirs = worst_case_directions(sub, k_v);
  for (auto& d : dirs) d *= scale;

  auto rng = make_rng(seed, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Mat psi_t = psi_from_metric(set.s_metric).transpose();
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    if (dirs.empty()) {
      out.push_back(scale * (psi_t * unit_direction(rng, nz)));
      continue;
    }
    if (dirs.size() == 1) {
      out.push_back(dirs.front());
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, dirs.size() - 1);
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    const double w = unif(rng);
    Vec z = w * dirs[a] + (1.0 - w) * dirs[b];
    // Antipodal pairs can cancel; fall back to the first endpoint.
    if (!(z.norm() > 1e-12 * scale)) z = dirs[a];
    out.push_back(rescale_to_boundary(z, set.s_metric, set.tau));
  }
  return out;
}

std::vector<Vec> sample_edge(const UncertaintySet& set, const LinearizedSubproblem& sub, const Vec& k_v, int n,
                             std::uint64_t seed) {
  return map_gamma(set, sample_edge_z(set, sub, k_v, n, seed));
}

ValidationReport evaluate(const ScenarioSpec& spec, const AffinePolicy& policy, const std::vector<Vec>& random,
                          const std::vector<Vec>& edge) {
  const DynamicsModel model = DynamicsModel::from_spec(spec);
  const std::size_t total = random.size() + edge.size();
  std::vector<SampleOutcome> outcomes(total);
  std::vector<Vec> values(total);

  const auto n = static_cast<long>(total);
  // Exceptions must not cross the parallel region; capture the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < n; ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      const bool is_random = idx < random.size();
      const Vec& zeta = is_random ? random[idx] : edge[idx - random.size()];
      const StackedTrajectory traj = rollout(model, policy, spec.x0_bar, zeta, spec.dt);
      values[idx] = evaluate_constraints(spec, model, traj);
      auto& o = outcomes[idx];
      o.id = static_cast<int>(is_random ? idx : idx - random.size());
      o.kind = is_random ? "random" : "edge";
      o.worst_margin = values[idx].size() ? values[idx].maxCoeff() : -std::numeric_limits<double>::infinity();
      o.success = o.worst_margin <= kViolationTolerance;
      o.terminal_state = traj.state(traj.horizon());
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ValidationReport rep;
  rep.n_random = static_cast<int>(random.size());
  rep.n_edge = static_cast<int>(edge.size());
  for (std::size_t i = 0; i < total; ++i) {
    if (!outcomes[i].success) continue;
    if (i < random.size())
      ++rep.satisfied_random;
    else
      ++rep.satisfied_edge;
  }
  rep.rate = total ? static_cast<double>(rep.satisfied_random + rep.satisfied_edge) / static_cast<double>(total) : 1.0;
  if (total && values.front().size()) {
    rep.worst_margins = values.front();
    for (std::size_t i = 1; i < total; ++i) rep.worst_margins = rep.worst_margins.cwiseMax(values[i]);
  }
  rep.samples = std::move(outcomes);
  return rep;
}

ValidationReport validate_policy(const ScenarioSpec& spec, const AffinePolicy& policy, int n_random, int n_edge,
                                 std::uint64_t seed) {
  require_valid(spec);
  const DynamicsModel model = DynamicsModel::from_spec(spec);
  const Vec zero = Vec::Zero((spec.horizon + 1) * model.nx);
  const StackedTrajectory nominal = rollout(model, policy, spec.x0_bar, zero, spec.dt);
  const LinearizedSubproblem sub = build_subproblem(spec, model, nominal, 0.0);
  const Vec k_v = vec_gains(policy.gains);

  const auto random = sample_interior(spec.uncertainty, n_random, seed);
  const auto edge = sample_edge(spec.uncertainty, sub, k_v, n_edge, seed);
  ValidationReport rep = evaluate(spec, policy, random, edge);
  rep.seed = seed;
  return rep;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

double time_projection_stage(int n_g, int n_z, int repeats, std::uint64_t seed) {
  auto rng = make_rng(seed, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec batch(static_cast<Eigen::Index>(n_g) * (1 + n_z));
  for (Eigen::Index i = 0; i < batch.size(); ++i) batch(i) = normal(rng);
  const std::vector<ConeSpec> cones(static_cast<std::size_t>(n_g), ConeSpec::soc(1 + n_z));

  // Each timing covers enough passes to rise well above clock resolution.
  const int passes = std::max(1, 200000 / std::max(1, n_g * (1 + n_z)));
  std::vector<double> times;
  for (int r = 0; r < repeats; ++r) {
    Vec work = batch;
    const auto t0 = std::chrono::steady_clock::now();
    for (int p = 0; p < passes; ++p) {
      work = batch;
      project_product_inplace(work, cones);
    }
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / passes);
  }
  return median(times);
}

double loglog_slope(const std::vector<double>& n_g, const std::vector<double>& seconds) {
  if (n_g.size() != seconds.size() || n_g.size() < 2) throw DimensionError("loglog_slope: need matching series");
  const auto n = static_cast<Eigen::Index>(n_g.size());
  Mat design(n, 2);
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(n_g[static_cast<std::size_t>(i)]);
    y(i) = std::log(seconds[static_cast<std::size_t>(i)]);
  }
  const Vec coef = design.colPivHouseholderQr().solve(y);
  return coef(1);
}

}  // namespace nrto
