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

#include "nrto/outer.hpp"

#include "nrto/block2.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace nrto {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double positive_sum(const Vec& v) { return v.size() ? v.cwiseMax(0.0).sum() : 0.0; }

Vec stack_controls(const std::vector<Vec>& controls, int horizon, int n_u) {
  Vec out = Vec::Zero(horizon * n_u);
  for (int k = 0; k < static_cast<int>(controls.size()) && k < horizon; ++k) out.segment(k * n_u, n_u) = controls[k];
  return out;
}

}  // namespace

std::string to_string(Engine engine) { return engine == Engine::dr ? "dr" : "fulladmm"; }

Engine engine_from_string(const std::string& name) {
  if (name == "dr") return Engine::dr;
  if (name == "fulladmm") return Engine::fulladmm;
  throw DataError("unknown engine '" + name + "' (expected dr or fulladmm)");
}

void OuterSettings::check() const {
  if (max_outer < 1) throw DataError("outer.max_outer must be at least 1");
  if (!(alpha_tr > 0.0 && alpha_tr < 1.0)) throw DataError("outer.alpha must lie in (0, 1)");
  if (!(beta_tr > 1.0)) throw DataError("outer.beta must exceed 1");
  if (!(r_min > 0.0 && r_min < r0)) throw DataError("outer.r_min must be positive and below r0");
  if (!(rho0 > 0.0 && rho0 <= rho_max)) throw DataError("outer.rho0 must be positive and at most rho_max");
  if (!(eta1 > 0.0) || !(eta2 > 0.0)) throw DataError("outer.eta1 and outer.eta2 must be positive");
  if (inner_iters < 1) throw DataError("outer.inner_iters must be at least 1");
}

OuterSettings default_outer_settings(ModelId model) {
  OuterSettings s;
  switch (model) {
    case ModelId::unicycle:
      break;
    case ModelId::quadcopter:
      s.r0 = 2.5;
      s.eps_u = 0.01;
      s.eps_p = 0.05;
      break;
    case ModelId::franka:
      s.max_outer = 80;
      s.rho_max = 80.0;
      s.eps_u = 0.0015;
      s.eps_p = 0.005;
      s.w_p = 250.0;
      s.inner_iters = 80;
      break;
  }
  return s;
}

EngineSettings default_engine_settings(ModelId model) {
  EngineSettings s;
  if (model == ModelId::franka) s.fulladmm.max_iters = 50;
  return s;
}

double subproblem_objective(const LinearizedSubproblem& sub, const Vec& delta_u, const Vec& k_v) {
  return sub.control_cost(delta_u) + sub.gain_cost(k_v);
}

InnerResult inner_nrto_admm(const LinearizedSubproblem& sub, double rho, double slack_weight, int max_iters,
                            double eps, const DrSettings& dr) {
  const int ng = sub.n_g(), nkv = sub.n_kv();
  InnerResult res;
  res.p = Vec::Zero(ng);
  res.p_tilde = Vec::Zero(ng);
  res.k_v = Vec::Zero(nkv);
  res.delta_u = Vec::Zero(sub.n_du());
  Vec lambda = Vec::Zero(ng);

  DrSolver block1(to_standard_form(sub, rho, res.p, lambda), dr);
  Block2Solver block2(sub, rho, slack_weight, dr);

  for (int l = 1; l <= max_iters; ++l) {
    const Vec p_tilde_prev = res.p_tilde;
    // {k_v, p_tilde} block: only the linear term moves between iterations.
    block1.update_q(block1_linear_term(sub, rho, res.p, lambda));
    const DrResult r1 = block1.solve();
    res.projection_seconds += r1.projection_seconds;
    res.k_v = r1.chi.head(nkv);
    res.p_tilde = r1.chi.tail(ng);

    // {delta_u, p} block with the scaled dual lambda / rho.
    const Block2Result r2 = block2.solve(res.p_tilde, lambda / rho);
    res.delta_u = r2.delta_u;
    res.p = r2.p;

    lambda += rho * (res.p - res.p_tilde);
    res.r_p = (res.p - res.p_tilde).norm();
    res.r_d = rho * (res.p_tilde - p_tilde_prev).norm();
    res.iterations = l;
    if (!res.k_v.allFinite() || !res.delta_u.allFinite()) throw SolverError("inner ADMM diverged (non-finite values)");
    if (res.r_p <= eps && res.r_d <= eps) {
      res.status = DrStatus::converged;
      break;
    }
  }
  return res;
}

InnerResult inner_fulladmm(const LinearizedSubproblem& sub, double slack_weight, int max_iters, double eps,
                           const FullAdmmSettings& settings) {
  FullAdmmSettings s = settings;
  s.slack_weight = slack_weight;
  s.max_iters = max_iters;
  s.eps_p = std::max(eps, settings.eps_p);
  s.eps_d = std::max(eps, settings.eps_d);
  const FullAdmmResult fr = solve_fulladmm(sub, s);
  InnerResult res;
  res.delta_u = fr.state.delta_u;
  res.k_v = fr.state.k_v;
  res.p = fr.state.p;
  res.p_tilde = fr.state.p_tilde;
  res.iterations = fr.iterations;
  res.status = fr.status;
  res.r_p = fr.r_p.empty() ? 0.0 : fr.r_p.back();
  res.r_d = fr.r_d.empty() ? 0.0 : fr.r_d.back();
  res.projection_seconds = fr.projection_seconds;
  return res;
}

StepDecision accept_step(double actual_reduction, double predicted_reduction, bool slack_persistent,
                         const OuterSettings& settings, double r_trust, double rho) {
  StepDecision d;
  if (actual_reduction > 0.0)
    d.accepted = predicted_reduction <= 0.0 || actual_reduction / predicted_reduction >= 1.0 / settings.eta1;
  d.r_trust = d.accepted ? std::min(settings.beta_tr * r_trust, settings.r0 * settings.eta2)
                         : std::max(settings.alpha_tr * r_trust, settings.r_min);
  d.rho = slack_persistent ? std::min(2.0 * rho, settings.rho_max) : rho;
  return d;
}

double true_cost(const ScenarioSpec& spec, const Vec& controls, const Vec& k_v) {
  const int nu = control_dim(spec.model), nx = state_dim(spec.model);
  double cost = 0.0;
  for (int k = 0; k < spec.horizon; ++k) {
    const auto u = controls.segment(k * nu, nu);
    cost += u.dot(spec.r_u[static_cast<std::size_t>(k)] * u);
    Eigen::Map<const Mat> gain(k_v.data() + static_cast<Eigen::Index>(k) * nu * nx, nu, nx);
    cost += (spec.r_k[static_cast<std::size_t>(k)] * gain).squaredNorm();
  }
  return cost;
}

double robust_violation(const LinearizedSubproblem& sub, const Vec& k_v) {
  if (sub.n_g() == 0) return 0.0;
  return std::max(0.0, (sub.g_value + sub.robust_margins(k_v)).maxCoeff());
}

RunArtifact run_nrto(const ScenarioSpec& spec, Engine engine, const OuterSettings& settings,
                     const EngineSettings& engine_settings) {
  require_valid(spec);
  settings.check();
  const auto t_start = Clock::now();
  const DynamicsModel model = DynamicsModel::from_spec(spec);
  const int nx = model.nx, nu = model.nu, T = spec.horizon;

  RunArtifact art;
  art.spec = spec;
  art.engine = engine;
  art.settings = settings;

  auto merit_of = [&](const LinearizedSubproblem& s, const Vec& controls, const Vec& kv) {
    return true_cost(spec, controls, kv) + settings.w_p * positive_sum(s.g_value + s.robust_margins(kv));
  };

  Vec u = stack_controls(spec.initial_controls, T, nu);
  StackedTrajectory nominal = rollout_nominal(model, u, spec.x0_bar, spec.dt);
  Vec k_v = Vec::Zero(T * nu * nx);
  double r_trust = settings.r0;
  double rho = settings.rho0;

  auto t0 = Clock::now();
  LinearizedSubproblem sub = build_subproblem(spec, model, nominal, r_trust);
  double t_lin_pending = seconds_since(t0);
  double merit = merit_of(sub, u, k_v);

  for (int it = 1; it <= settings.max_outer; ++it) {
    OuterIterationMetrics m;
    m.iteration = it;
    m.merit = merit;
    m.r_trust = r_trust;
    m.rho = rho;
    m.t_linearize = t_lin_pending;
    sub.r_trust = r_trust;

    const double viol_now = robust_violation(sub, k_v);
    const double eps_inner = std::max(settings.c_eps * viol_now, settings.inner_eps_floor);

    t0 = Clock::now();
    const InnerResult inner =
        engine == Engine::dr
            ? inner_nrto_admm(sub, rho, settings.w_p, settings.inner_iters, eps_inner, engine_settings.dr)
            : inner_fulladmm(sub, settings.w_p, engine_settings.fulladmm.max_iters, eps_inner,
                             engine_settings.fulladmm);
    m.t_inner = seconds_since(t0);
    m.t_projection = inner.projection_seconds;
    m.inner_iterations = inner.iterations;
    m.inner_status = to_string(inner.status);

    const double model_merit = subproblem_objective(sub, inner.delta_u, inner.k_v) +
                               settings.w_p * positive_sum(sub.robust_values(inner.delta_u, inner.k_v));
    m.predicted = merit - model_merit;
    m.step_inf = inner.delta_u.size() ? inner.delta_u.lpNorm<Eigen::Infinity>() : 0.0;

    const Vec u_cand = u + inner.delta_u;
    t0 = Clock::now();
    StackedTrajectory cand_nominal = rollout_nominal(model, u_cand, spec.x0_bar, spec.dt);
    LinearizedSubproblem cand_sub = build_subproblem(spec, model, cand_nominal, r_trust);
    const double t_lin = seconds_since(t0);
    const double cand_merit = merit_of(cand_sub, u_cand, inner.k_v);
    m.candidate_merit = cand_merit;
    m.actual = merit - cand_merit;
    m.violation = robust_violation(cand_sub, inner.k_v);

    const bool slack = inner.r_p > eps_inner;
    StepDecision dec = accept_step(m.actual, m.predicted, slack, settings, r_trust, rho);
    // A step below eps_u ends the run. The candidate is taken when it is
    // feasible and does not raise the merit beyond rounding noise; otherwise
    // the run stops at the current nominal if that one is feasible. A
    // rejection at r_min with an unchanged penalty ends the run the same
    // way, since the next iteration would repeat it.
    const double noise = 1e-9 * (1.0 + std::abs(merit));
    const bool small_step = m.step_inf <= settings.eps_u;
    const bool collapsed = !dec.accepted && r_trust <= settings.r_min && dec.rho == rho;
    const bool take_candidate = small_step && m.violation <= settings.eps_p && m.actual >= -noise;
    const bool done =
        take_candidate || ((small_step || collapsed) && !dec.accepted && viol_now <= settings.eps_p);
    if (take_candidate) dec.accepted = true;

    m.accepted = dec.accepted;
    if (dec.accepted) {
      u = u_cand;
      nominal = std::move(cand_nominal);
      sub = std::move(cand_sub);
      k_v = inner.k_v;
      merit = cand_merit;
      t_lin_pending = t_lin;
    } else {
      t_lin_pending = 0.0;
    }
    r_trust = dec.r_trust;
    rho = dec.rho;
    art.iterations.push_back(m);
    if (done) {
      art.status = "converged";
      break;
    }
    if (collapsed) {
      art.message = "trust region collapsed to r_min at an infeasible nominal";
      break;
    }
  }

  AffinePolicy policy;
  const auto gains = devec_gains(k_v, nu, nx);
  for (int k = 0; k < T; ++k) {
    policy.u_bar.push_back(u.segment(k * nu, nu));
    policy.gains.push_back(gains[static_cast<std::size_t>(k)]);
  }
  art.policy = std::move(policy);
  art.nominal = std::move(nominal);
  art.final_violation = robust_violation(sub, k_v);
  art.cost = true_cost(spec, u, k_v);
  if (!art.converged() && art.message.empty())
    art.message = "reached max_outer = " + std::to_string(settings.max_outer) +
                  " without meeting the termination tolerances (robust violation " +
                  std::to_string(art.final_violation) + ")";
  art.wall_seconds = seconds_since(t_start);
  return art;
}

BenchmarkSummary benchmark(const ScenarioSpec& spec, Engine engine, const OuterSettings& settings,
                           const EngineSettings& engine_settings, int repeats) {
  BenchmarkSummary out;
  for (int r = 0; r < repeats; ++r) {
    const RunArtifact art = run_nrto(spec, engine, settings, engine_settings);
    double lin = 0.0, inner = 0.0, proj = 0.0;
    for (const auto& m : art.iterations) {
      lin += m.t_linearize;
      inner += m.t_inner;
      proj += m.t_projection;
    }
    out.phases.linearize.push_back(lin);
    out.phases.inner.push_back(inner);
    out.phases.projection.push_back(proj);
    out.phases.total.push_back(art.wall_seconds);
  }
  out.median_linearize = median(out.phases.linearize);
  out.median_inner = median(out.phases.inner);
  out.median_projection = median(out.phases.projection);
  out.median_total = median(out.phases.total);
  return out;
}

}  // namespace nrto
