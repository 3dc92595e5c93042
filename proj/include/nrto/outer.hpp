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

#ifndef NRTO_OUTER_HPP
#define NRTO_OUTER_HPP

#include "nrto/core.hpp"
#include "nrto/dynamics.hpp"
#include "nrto/linearize.hpp"
#include "nrto/solver_dr.hpp"
#include "nrto/solver_fulladmm.hpp"
#include "nrto/validate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nrto {

enum class Engine { dr, fulladmm };
std::string to_string(Engine engine);
Engine engine_from_string(const std::string& name);

struct OuterSettings {
  int max_outer = 200;
  double r0 = 2.0;
  double r_min = 1e-3;
  double rho0 = 40.0;
  double rho_max = 180.0;
  double alpha_tr = 0.8;
  double beta_tr = 1.5;
  double eta1 = 5.0;
  double eta2 = 4.0;
  double eps_u = 1e-3;
  double eps_p = 1e-4;
  double w_p = 10.0;
  int inner_iters = 40;
  double c_eps = 0.01;
  double inner_eps_floor = 1e-3;  // lower clamp of the adaptive inner tolerance

  void check() const;
};

struct EngineSettings {
  DrSettings dr;
  FullAdmmSettings fulladmm;
};

/// Published per-model hyperparameters (one value picked where a range is given).
OuterSettings default_outer_settings(ModelId model);
EngineSettings default_engine_settings(ModelId model);

struct InnerResult {
  Vec delta_u;
  Vec k_v;
  Vec p;
  Vec p_tilde;
  int iterations = 0;
  DrStatus status = DrStatus::max_iters;
  double r_p = 0.0;
  double r_d = 0.0;
  double projection_seconds = 0.0;
};

/// The inner ADMM over (k_v, p_tilde) / (delta_u, p) with dual lambda on the
/// coupling p = p_tilde. Both blocks are solved by the DR engine; each
/// block's KKT matrix is factored once per call. slack_weight is the l1
/// weight on the linear-row slack of block 2 (see Block2Solver).
InnerResult inner_nrto_admm(const LinearizedSubproblem& sub, double rho, double slack_weight, int max_iters,
                            double eps, const DrSettings& dr);

InnerResult inner_fulladmm(const LinearizedSubproblem& sub, double slack_weight, int max_iters, double eps,
                           const FullAdmmSettings& settings);

/// Objective of the linearized problem, Q_uhat(du) + 0.5 kv' Q_v kv.
double subproblem_objective(const LinearizedSubproblem& sub, const Vec& delta_u, const Vec& k_v);

struct StepDecision {
  bool accepted = false;
  double r_trust = 0.0;
  double rho = 0.0;
};

/// Ratio test. Accepts when the actual merit reduction is positive and at
/// least 1/eta1 of the predicted one (a non-positive prediction with positive
/// actual reduction also accepts). Radius grows by beta on acceptance, capped
/// at r0 eta2, and shrinks by alpha_tr on rejection, floored at r_min. The
/// penalty doubles (capped at rho_max) while the inner slack persists.
StepDecision accept_step(double actual_reduction, double predicted_reduction, bool slack_persistent,
                         const OuterSettings& settings, double r_trust, double rho);

struct OuterIterationMetrics {
  int iteration = 0;
  double merit = 0.0;            // merit at the nominal entering the iteration
  double candidate_merit = 0.0;  // merit of the relinearized candidate
  double predicted = 0.0;
  double actual = 0.0;
  double violation = 0.0;  // max robust constraint value of the candidate (clamped at 0)
  double step_inf = 0.0;   // |delta_u|_inf
  double r_trust = 0.0;
  double rho = 0.0;
  int inner_iterations = 0;
  std::string inner_status;
  bool accepted = false;
  double t_linearize = 0.0;
  double t_inner = 0.0;
  double t_projection = 0.0;
};

struct RunArtifact {
  ScenarioSpec spec;
  Engine engine = Engine::dr;
  OuterSettings settings;
  AffinePolicy policy;
  StackedTrajectory nominal;
  std::vector<OuterIterationMetrics> iterations;
  std::optional<ValidationReport> validation;
  std::string status = "not_converged";  // "converged" or "not_converged"
  std::string message;
  double final_violation = 0.0;
  double cost = 0.0;
  double wall_seconds = 0.0;

  bool converged() const { return status == "converged"; }
};

/// Nonlinear objective sum_k u_k' R_u u_k + |R_K K_k|_F^2.
double true_cost(const ScenarioSpec& spec, const Vec& controls, const Vec& k_v);

/// Largest linearized robust constraint value g_j + |A_hat_j kv + b_hat_j| at
/// du = 0, clamped below at 0.
double robust_violation(const LinearizedSubproblem& sub, const Vec& k_v);

RunArtifact run_nrto(const ScenarioSpec& spec, Engine engine, const OuterSettings& settings,
                     const EngineSettings& engine_settings);

/// Wall-clock summary of repeated solves (no validation).
struct BenchmarkSummary {
  PhaseTimings phases;
  double median_linearize = 0.0;
  double median_inner = 0.0;
  double median_projection = 0.0;
  double median_total = 0.0;
};

BenchmarkSummary benchmark(const ScenarioSpec& spec, Engine engine, const OuterSettings& settings,
                           const EngineSettings& engine_settings, int repeats);

}  // namespace nrto

#endif  // NRTO_OUTER_HPP
