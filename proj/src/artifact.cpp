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

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

namespace nrto {

using json = nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("run.json: unexpected string '" + s + "' where a number was expected");
  }
  return j.get<double>();
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

Vec vec_from(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_num(j[i]);
  return v;
}

// Row-major with explicit shape.
json mat_json(const Mat& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(num(m(r, c)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Mat mat_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("run.json: matrix data has the wrong size");
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_num(data[static_cast<std::size_t>(r * cols + c)]);
  return m;
}

template <typename T, typename F>
json list_json(const std::vector<T>& items, F&& f) {
  json out = json::array();
  for (const auto& item : items) out.push_back(f(item));
  return out;
}

template <typename T, typename F>
std::vector<T> list_from(const json& j, F&& f) {
  std::vector<T> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(f(item));
  return out;
}

json spec_json(const ScenarioSpec& s) {
  json j;
  j["model"] = to_string(s.model);
  j["unicycle"] = {{"v_max", num(s.unicycle.v_max)}, {"omega_max", num(s.unicycle.omega_max)}};
  j["quadcopter"] = {{"mass", num(s.quadcopter.mass)},
                     {"gravity", num(s.quadcopter.gravity)},
                     {"inertia", vec_json(s.quadcopter.inertia)},
                     {"thrust_min", num(s.quadcopter.thrust_min)},
                     {"thrust_max", num(s.quadcopter.thrust_max)},
                     {"torque_max", num(s.quadcopter.torque_max)}};
  j["franka"] = {{"q_min", vec_json(s.franka.q_min)},     {"q_max", vec_json(s.franka.q_max)},
                 {"dq_max", vec_json(s.franka.dq_max)},   {"tau_max", vec_json(s.franka.tau_max)},
                 {"damping", vec_json(s.franka.damping)}, {"inertia", vec_json(s.franka.inertia)}};
  j["horizon"] = s.horizon;
  j["dt"] = num(s.dt);
  j["x0_bar"] = vec_json(s.x0_bar);
  j["obstacles"] = list_json(s.obstacles, [](const Obstacle& o) {
    return json{{"center", vec_json(o.center)}, {"radius", num(o.radius)}};
  });
  j["obstacle_margin"] = num(s.obstacle_margin);
  j["goal"] = s.goal ? json{{"center", vec_json(s.goal->center)}, {"half_width", num(s.goal->half_width)}} : json();
  j["control_min"] = vec_json(s.control_min);
  j["control_max"] = vec_json(s.control_max);
  j["state_min"] = s.state_min ? vec_json(*s.state_min) : json();
  j["state_max"] = s.state_max ? vec_json(*s.state_max) : json();
  j["r_u"] = list_json(s.r_u, mat_json);
  j["r_k"] = list_json(s.r_k, mat_json);
  j["uncertainty"] = {{"gamma", mat_json(s.uncertainty.gamma)},
                      {"s_metric", mat_json(s.uncertainty.s_metric)},
                      {"tau", num(s.uncertainty.tau)}};
  j["initial_controls"] = list_json(s.initial_controls, vec_json);
  return j;
}

ScenarioSpec spec_from(const json& j) {
  ScenarioSpec s;
  s.model = model_id_from_string(j.at("model").get<std::string>());
  s.unicycle.v_max = get_num(j.at("unicycle").at("v_max"));
  s.unicycle.omega_max = get_num(j.at("unicycle").at("omega_max"));
  const json& q = j.at("quadcopter");
  s.quadcopter.mass = get_num(q.at("mass"));
  s.quadcopter.gravity = get_num(q.at("gravity"));
  s.quadcopter.inertia = vec_from(q.at("inertia"));
  s.quadcopter.thrust_min = get_num(q.at("thrust_min"));
  s.quadcopter.thrust_max = get_num(q.at("thrust_max"));
  s.quadcopter.torque_max = get_num(q.at("torque_max"));
  const json& f = j.at("franka");
  s.franka.q_min = vec_from(f.at("q_min"));
  s.franka.q_max = vec_from(f.at("q_max"));
  s.franka.dq_max = vec_from(f.at("dq_max"));
  s.franka.tau_max = vec_from(f.at("tau_max"));
  s.franka.damping = vec_from(f.at("damping"));
  s.franka.inertia = vec_from(f.at("inertia"));
  s.horizon = j.at("horizon").get<int>();
  s.dt = get_num(j.at("dt"));
  s.x0_bar = vec_from(j.at("x0_bar"));
  s.obstacles = list_from<Obstacle>(j.at("obstacles"), [](const json& o) {
    return Obstacle{vec_from(o.at("center")), get_num(o.at("radius"))};
  });
  s.obstacle_margin = get_num(j.at("obstacle_margin"));
  if (!j.at("goal").is_null())
    s.goal = GoalRegion{vec_from(j["goal"].at("center")), get_num(j["goal"].at("half_width"))};
  s.control_min = vec_from(j.at("control_min"));
  s.control_max = vec_from(j.at("control_max"));
  if (!j.at("state_min").is_null()) s.state_min = vec_from(j["state_min"]);
  if (!j.at("state_max").is_null()) s.state_max = vec_from(j["state_max"]);
  s.r_u = list_from<Mat>(j.at("r_u"), mat_from);
  s.r_k = list_from<Mat>(j.at("r_k"), mat_from);
  const json& u = j.at("uncertainty");
  s.uncertainty.gamma = mat_from(u.at("gamma"));
  s.uncertainty.s_metric = mat_from(u.at("s_metric"));
  s.uncertainty.tau = get_num(u.at("tau"));
  s.initial_controls = list_from<Vec>(j.at("initial_controls"), vec_from);
  return s;
}

json outer_json(const OuterSettings& o) {
  return {{"max_outer", o.max_outer},   {"r0", num(o.r0)},         {"r_min", num(o.r_min)},
          {"rho0", num(o.rho0)},         {"rho_max", num(o.rho_max)}, {"alpha", num(o.alpha_tr)},
          {"beta", num(o.beta_tr)},      {"eta1", num(o.eta1)},     {"eta2", num(o.eta2)},
          {"eps_u", num(o.eps_u)},       {"eps_p", num(o.eps_p)},   {"w_p", num(o.w_p)},
          {"inner_iters", o.inner_iters}, {"c_eps", num(o.c_eps)},  {"inner_eps_floor", num(o.inner_eps_floor)}};
}

OuterSettings outer_from(const json& j) {
  OuterSettings o;
  o.max_outer = j.at("max_outer").get<int>();
  o.r0 = get_num(j.at("r0"));
  o.r_min = get_num(j.at("r_min"));
  o.rho0 = get_num(j.at("rho0"));
  o.rho_max = get_num(j.at("rho_max"));
  o.alpha_tr = get_num(j.at("alpha"));
  o.beta_tr = get_num(j.at("beta"));
  o.eta1 = get_num(j.at("eta1"));
  o.eta2 = get_num(j.at("eta2"));
  o.eps_u = get_num(j.at("eps_u"));
  o.eps_p = get_num(j.at("eps_p"));
  o.w_p = get_num(j.at("w_p"));
  o.inner_iters = j.at("inner_iters").get<int>();
  o.c_eps = get_num(j.at("c_eps"));
  o.inner_eps_floor = get_num(j.at("inner_eps_floor"));
  return o;
}

json iteration_json(const OuterIterationMetrics& m) {
  return {{"iteration", m.iteration},
          {"merit", num(m.merit)},
          {"candidate_merit", num(m.candidate_merit)},
          {"predicted", num(m.predicted)},
          {"actual", num(m.actual)},
          {"violation", num(m.violation)},
          {"step_inf", num(m.step_inf)},
          {"r_trust", num(m.r_trust)},
          {"rho", num(m.rho)},
          {"inner_iterations", m.inner_iterations},
          {"inner_status", m.inner_status},
          {"accepted", m.accepted},
          {"t_linearize", num(m.t_linearize)},
          {"t_inner", num(m.t_inner)},
          {"t_projection", num(m.t_projection)}};
}

OuterIterationMetrics iteration_from(const json& j) {
  OuterIterationMetrics m;
  m.iteration = j.at("iteration").get<int>();
  m.merit = get_num(j.at("merit"));
  m.candidate_merit = get_num(j.at("candidate_merit"));
  m.predicted = get_num(j.at("predicted"));
  m.actual = get_num(j.at("actual"));
  m.violation = get_num(j.at("violation"));
  m.step_inf = get_num(j.at("step_inf"));
  m.r_trust = get_num(j.at("r_trust"));
  m.rho = get_num(j.at("rho"));
  m.inner_iterations = j.at("inner_iterations").get<int>();
  m.inner_status = j.at("inner_status").get<std::string>();
  m.accepted = j.at("accepted").get<bool>();
  m.t_linearize = get_num(j.at("t_linearize"));
  m.t_inner = get_num(j.at("t_inner"));
  m.t_projection = get_num(j.at("t_projection"));
  return m;
}

json validation_json(const ValidationReport& r) {
  return {{"n_random", r.n_random},
          {"n_edge", r.n_edge},
          {"satisfied_random", r.satisfied_random},
          {"satisfied_edge", r.satisfied_edge},
          {"rate", num(r.rate)},
          {"seed", r.seed},
          {"worst_margins", vec_json(r.worst_margins)},
          {"samples", list_json(r.samples, [](const SampleOutcome& s) {
             return json{{"id", s.id},
                         {"kind", s.kind},
                         {"success", s.success},
                         {"worst_margin", num(s.worst_margin)},
                         {"terminal_state", vec_json(s.terminal_state)}};
           })}};
}

ValidationReport validation_from(const json& j) {
  ValidationReport r;
  r.n_random = j.at("n_random").get<int>();
  r.n_edge = j.at("n_edge").get<int>();
  r.satisfied_random = j.at("satisfied_random").get<int>();
  r.satisfied_edge = j.at("satisfied_edge").get<int>();
  r.rate = get_num(j.at("rate"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.worst_margins = vec_from(j.at("worst_margins"));
  r.samples = list_from<SampleOutcome>(j.at("samples"), [](const json& s) {
    SampleOutcome o;
    o.id = s.at("id").get<int>();
    o.kind = s.at("kind").get<std::string>();
    o.success = s.at("success").get<bool>();
    o.worst_margin = get_num(s.at("worst_margin"));
    o.terminal_state = vec_from(s.at("terminal_state"));
    return o;
  });
  return r;
}

}  // namespace

void write_run_json(std::ostream& os, const RunArtifact& a) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["status"] = a.status;
  j["message"] = a.message;
  j["engine"] = to_string(a.engine);
  j["spec"] = spec_json(a.spec);
  j["settings"] = outer_json(a.settings);
  j["policy"] = {{"u_bar", list_json(a.policy.u_bar, vec_json)}, {"gains", list_json(a.policy.gains, mat_json)}};
  j["nominal"] = {{"n_x", a.nominal.n_x},
                  {"n_u", a.nominal.n_u},
                  {"states", vec_json(a.nominal.states)},
                  {"controls", vec_json(a.nominal.controls)}};
  j["iterations"] = list_json(a.iterations, iteration_json);
  j["validation"] = a.validation ? validation_json(*a.validation) : json();
  j["final_violation"] = num(a.final_violation);
  j["cost"] = num(a.cost);
  j["wall_seconds"] = num(a.wall_seconds);
  os << j.dump(1) << '\n';
}

RunArtifact read_run_json(std::istream& is, const std::string& source) {
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw DataError(source + ": " + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw DataError(source + ": unsupported schema_version");
    RunArtifact a;
    a.status = j.at("status").get<std::string>();
    if (a.status != "converged" && a.status != "not_converged")
      throw DataError(source + ": unknown status '" + a.status + "'");
    a.message = j.at("message").get<std::string>();
    a.engine = engine_from_string(j.at("engine").get<std::string>());
    a.spec = spec_from(j.at("spec"));
    a.settings = outer_from(j.at("settings"));
    a.policy.u_bar = list_from<Vec>(j.at("policy").at("u_bar"), vec_from);
    a.policy.gains = list_from<Mat>(j.at("policy").at("gains"), mat_from);
    const json& n = j.at("nominal");
    a.nominal.n_x = n.at("n_x").get<int>();
    a.nominal.n_u = n.at("n_u").get<int>();
    a.nominal.states = vec_from(n.at("states"));
    a.nominal.controls = vec_from(n.at("controls"));
    a.iterations = list_from<OuterIterationMetrics>(j.at("iterations"), iteration_from);
    if (!j.at("validation").is_null()) a.validation = validation_from(j["validation"]);
    a.final_violation = get_num(j.at("final_violation"));
    a.cost = get_num(j.at("cost"));
    a.wall_seconds = get_num(j.at("wall_seconds"));
    return a;
  } catch (const json::exception& e) {
    throw DataError(source + ": malformed run artifact: " + e.what());
  }
}

RunArtifact load_run_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open run artifact '" + path + "'");
  return read_run_json(in, path);
}

void write_trajectory_csv(std::ostream& os, const StackedTrajectory& nominal) {
  const int nx = nominal.n_x, nu = nominal.n_u, T = nominal.horizon();
  os << "k";
  for (int i = 0; i < nx; ++i) os << ",x" << i;
  for (int i = 0; i < nu; ++i) os << ",u" << i;
  os << '\n' << std::setprecision(17);
  for (int k = 0; k <= T; ++k) {
    os << k;
    for (int i = 0; i < nx; ++i) os << ',' << nominal.state(k)(i);
    for (int i = 0; i < nu; ++i) {
      os << ',';
      if (k < T) os << nominal.control(k)(i);
    }
    os << '\n';
  }
}

void write_gains_csv(std::ostream& os, const AffinePolicy& policy) {
  const Eigen::Index width = policy.gains.empty() ? 0 : policy.gains.front().size();
  os << "k";
  for (Eigen::Index i = 0; i < width; ++i) os << ",kv" << i;
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < policy.gains.size(); ++k) {
    const Mat& K = policy.gains[k];
    os << k;
    for (Eigen::Index i = 0; i < K.size(); ++i) os << ',' << K.data()[i];  // column-major storage
    os << '\n';
  }
}

void write_rollouts_csv(std::ostream& os, const ValidationReport& report) {
  const Eigen::Index nx = report.samples.empty() ? 0 : report.samples.front().terminal_state.size();
  os << "id,kind,success,worst_margin";
  for (Eigen::Index i = 0; i < nx; ++i) os << ",xT" << i;
  os << '\n' << std::setprecision(17);
  for (const auto& s : report.samples) {
    os << s.id << ',' << s.kind << ',' << (s.success ? 1 : 0) << ',' << s.worst_margin;
    for (Eigen::Index i = 0; i < s.terminal_state.size(); ++i) os << ',' << s.terminal_state(i);
    os << '\n';
  }
}

void write_metrics_json(std::ostream& os, const ValidationReport& r) {
  auto rate = [](int ok, int n) { return n > 0 ? static_cast<double>(ok) / n : 0.0; };
  const json j = {{"n_random", r.n_random},
                  {"n_edge", r.n_edge},
                  {"satisfied_random", r.satisfied_random},
                  {"satisfied_edge", r.satisfied_edge},
                  {"rate_random", rate(r.satisfied_random, r.n_random)},
                  {"rate_edge", rate(r.satisfied_edge, r.n_edge)},
                  {"rate", num(r.rate)},
                  {"seed", r.seed},
                  {"worst_margins", vec_json(r.worst_margins)}};
  os << j.dump(1) << '\n';
}

}  // namespace nrto
