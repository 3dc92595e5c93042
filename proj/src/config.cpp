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

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace nrto {

namespace pt = boost::property_tree;

ScenarioSpec ScenarioTemplate::instantiate() const {
  ScenarioSpec spec;
  spec.model = model;
  spec.unicycle = unicycle;
  spec.quadcopter = quadcopter;
  spec.franka = franka;
  spec.horizon = horizon;
  spec.dt = dt;
  spec.x0_bar = x0_bar;
  spec.obstacles = obstacles;
  spec.obstacle_margin = obstacle_margin;
  spec.goal = goal;
  const auto [lo, hi] = default_control_limits(spec);
  spec.control_min = control_min.value_or(lo);
  spec.control_max = control_max.value_or(hi);
  spec.state_min = state_min;
  spec.state_max = state_max;
  const auto T = static_cast<std::size_t>(std::max(horizon, 0));
  spec.r_u.assign(T, r_u);
  spec.r_k.assign(T, r_k);
  if (initial_control) spec.initial_controls.assign(T, *initial_control);

  const int nx = state_dim(model);
  const int dim = (horizon + 1) * nx;
  spec.uncertainty.gamma = Mat::Identity(dim, dim);
  spec.uncertainty.s_metric = Mat::Zero(dim, dim);
  if (s0.rows() == nx && sd.rows() == nx) {
    spec.uncertainty.s_metric.topLeftCorner(nx, nx) = s0;
    for (int k = 1; k <= horizon; ++k) spec.uncertainty.s_metric.block(k * nx, k * nx, nx, nx) = sd;
  }
  spec.uncertainty.tau = tau;
  return spec;
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model",
       {"name", "dt", "x0", "initial_control", "control_min", "control_max", "state_min", "state_max", "goal",
        "goal_half_width", "v_max", "omega_max", "mass", "thrust_min", "thrust_max", "torque_max"}},
      {"horizon", {"T"}},
      {"uncertainty", {"tau", "gamma", "s0", "sd"}},
      {"obstacles", {}},  // free-form obstacle keys plus "margin"
      {"weights", {"r_u", "r_k"}},
      {"outer",
       {"max_outer", "r0", "r_min", "rho0", "rho_max", "alpha", "beta", "eta1", "eta2", "eps_u", "eps_p", "w_p",
        "inner_iters", "c_eps", "inner_eps_floor"}},
      {"dr", {"alpha", "sigma", "r_s", "eps", "max_iters", "warm_start", "dense_threshold", "scaling_iters"}},
      {"fulladmm", {"rho", "max_iters", "eps_p", "eps_d", "direct_threshold", "pcg_tol", "pcg_iters"}},
      {"validate", {"n_random", "n_edge", "seed"}},
  };
  return keys;
}

// Reads the raw text once more to remember where every key lives.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) {
    std::istringstream is(text);
    std::string line, section;
    int no = 0;
    while (std::getline(is, line)) {
      ++no;
      boost::algorithm::trim(line);
      if (line.empty() || line[0] == ';' || line[0] == '#') continue;
      if (line.front() == '[' && line.back() == ']') {
        section = boost::algorithm::trim_copy(line.substr(1, line.size() - 2));
        sections_[section] = no;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      keys_[section + "." + boost::algorithm::trim_copy(line.substr(0, eq))] = no;
    }
  }
  int key(const std::string& section, const std::string& name) const {
    const auto it = keys_.find(section + "." + name);
    return it == keys_.end() ? 0 : it->second;
  }
  int section(const std::string& name) const {
    const auto it = sections_.find(name);
    return it == sections_.end() ? 0 : it->second;
  }

 private:
  std::map<std::string, int> keys_;
  std::map<std::string, int> sections_;
};

class Reader {
 public:
  Reader(const pt::ptree& tree, const LineIndex& lines, std::string source)
      : tree_(tree), lines_(lines), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    const int line = key.empty() ? lines_.section(section) : lines_.key(section, key);
    std::string where = source_;
    if (line > 0) where += ":" + std::to_string(line);
    throw DataError(where + ": [" + section + "]" + (key.empty() ? "" : " " + key) + ": " + what);
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto val = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!val) return std::nullopt;
    return boost::algorithm::trim_copy(*val);
  }

  std::vector<double> numbers(const std::string& section, const std::string& key, const std::string& text) const {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, text, boost::algorithm::is_any_of(" \t,"), boost::algorithm::token_compress_on);
    std::vector<double> out;
    for (const auto& p : parts) {
      if (p.empty()) continue;
      try {
        std::size_t used = 0;
        out.push_back(std::stod(p, &used));
        if (used != p.size()) throw std::invalid_argument(p);
      } catch (const std::logic_error&) {
        fail(section, key, "'" + p + "' is not a number");
      }
    }
    return out;
  }

  template <typename T>
  void scalar(const std::string& section, const std::string& key, T& target) const {
    const auto text = raw(section, key);
    if (!text) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (*text == "true" || *text == "1") target = true;
      else if (*text == "false" || *text == "0") target = false;
      else fail(section, key, "expected true or false, got '" + *text + "'");
    } else {
      const auto v = numbers(section, key, *text);
      if (v.size() != 1) fail(section, key, "expected a single number");
      if constexpr (std::is_integral_v<T>) {
        if (v[0] != static_cast<double>(static_cast<long long>(v[0]))) fail(section, key, "expected an integer");
        target = static_cast<T>(v[0]);
      } else {
        target = static_cast<T>(v[0]);
      }
    }
  }

  std::optional<Vec> vector(const std::string& section, const std::string& key, int dim) const {
    const auto text = raw(section, key);
    if (!text) return std::nullopt;
    const auto v = numbers(section, key, *text);
    if (static_cast<int>(v.size()) != dim)
      fail(section, key, "expected " + std::to_string(dim) + " numbers, got " + std::to_string(v.size()));
    return Eigen::Map<const Vec>(v.data(), dim);
  }

  /// A scalar (times I), a diagonal, or a full row-major dim x dim matrix.
  std::optional<Mat> matrix(const std::string& section, const std::string& key, int dim) const {
    const auto text = raw(section, key);
    if (!text) return std::nullopt;
    const auto v = numbers(section, key, *text);
    const auto n = static_cast<int>(v.size());
    if (n == 1) return Mat(v[0] * Mat::Identity(dim, dim));
    if (n == dim) return Mat(Eigen::Map<const Vec>(v.data(), dim).asDiagonal());
    if (n == dim * dim) return Mat(Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(v.data(), dim, dim));
    fail(section, key,
         "expected 1, " + std::to_string(dim) + " or " + std::to_string(dim * dim) + " numbers, got " +
             std::to_string(n));
  }

  const pt::ptree& tree() const { return tree_; }

 private:
  const pt::ptree& tree_;
  const LineIndex& lines_;
  std::string source_;
};

void check_known(const Reader& rd, const pt::ptree& tree) {
  const auto& keys = known_keys();
  for (const auto& [section, child] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end()) rd.fail(section, "", "unknown section");
    if (section == "obstacles") continue;
    for (const auto& kv : child)
      if (!it->second.count(kv.first)) rd.fail(section, kv.first, "unknown key");
  }
}

}  // namespace

RunConfig parse_config(std::istream& is, const std::string& source) {
  std::stringstream buffer;
  buffer << is.rdbuf();
  const std::string text = buffer.str();

  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw DataError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  const LineIndex lines(text);
  const Reader rd(tree, lines, source);
  check_known(rd, tree);

  RunConfig cfg;
  cfg.source = source;
  ScenarioTemplate& sc = cfg.scenario;

  const auto name = rd.raw("model", "name");
  if (!name) rd.fail("model", "", "missing required key 'name'");
  try {
    sc.model = model_id_from_string(*name);
  } catch (const Error& e) {
    rd.fail("model", "name", e.what());
  }
  const int nx = state_dim(sc.model), nu = control_dim(sc.model);
  const int wd = sc.model == ModelId::unicycle ? 2 : 3;

  rd.scalar("model", "dt", sc.dt);
  sc.x0_bar = rd.vector("model", "x0", nx).value_or(Vec::Zero(nx));
  sc.initial_control = rd.vector("model", "initial_control", nu);
  sc.control_min = rd.vector("model", "control_min", nu);
  sc.control_max = rd.vector("model", "control_max", nu);
  sc.state_min = rd.vector("model", "state_min", nx);
  sc.state_max = rd.vector("model", "state_max", nx);
  if (const auto g = rd.vector("model", "goal", wd)) {
    GoalRegion goal{*g, 0.0};
    if (!rd.raw("model", "goal_half_width")) rd.fail("model", "goal", "goal needs goal_half_width");
    rd.scalar("model", "goal_half_width", goal.half_width);
    if (!(goal.half_width > 0.0)) rd.fail("model", "goal_half_width", "must be positive");
    sc.goal = goal;
  }
  rd.scalar("model", "v_max", sc.unicycle.v_max);
  rd.scalar("model", "omega_max", sc.unicycle.omega_max);
  rd.scalar("model", "mass", sc.quadcopter.mass);
  rd.scalar("model", "thrust_min", sc.quadcopter.thrust_min);
  rd.scalar("model", "thrust_max", sc.quadcopter.thrust_max);
  rd.scalar("model", "torque_max", sc.quadcopter.torque_max);

  rd.scalar("horizon", "T", sc.horizon);
  if (sc.horizon < 1) rd.fail("horizon", "T", "must be at least 1");

  rd.scalar("uncertainty", "tau", sc.tau);
  if (const auto g = rd.raw("uncertainty", "gamma"); g && *g != "identity")
    rd.fail("uncertainty", "gamma", "only 'identity' is supported");
  sc.s0 = rd.matrix("uncertainty", "s0", nx).value_or(Mat::Identity(nx, nx));
  sc.sd = rd.matrix("uncertainty", "sd", nx).value_or(Mat::Identity(nx, nx));

  if (const auto obs = tree.get_child_optional("obstacles")) {
    for (const auto& [key, value] : *obs) {
      if (key == "margin") {
        rd.scalar("obstacles", "margin", sc.obstacle_margin);
        continue;
      }
      const auto v = rd.numbers("obstacles", key, value.data());
      if (static_cast<int>(v.size()) != wd + 1)
        rd.fail("obstacles", key, "expected " + std::to_string(wd) + " center coordinates and a radius");
      Obstacle o;
      o.center = Eigen::Map<const Vec>(v.data(), wd);
      o.radius = v.back();
      sc.obstacles.push_back(o);
    }
  }

  sc.r_u = rd.matrix("weights", "r_u", nu).value_or(Mat::Identity(nu, nu));
  sc.r_k = rd.matrix("weights", "r_k", nu).value_or(Mat::Identity(nu, nu));

  OuterSettings& o = cfg.outer;
  o = default_outer_settings(sc.model);
  rd.scalar("outer", "max_outer", o.max_outer);
  rd.scalar("outer", "r0", o.r0);
  rd.scalar("outer", "r_min", o.r_min);
  rd.scalar("outer", "rho0", o.rho0);
  rd.scalar("outer", "rho_max", o.rho_max);
  rd.scalar("outer", "alpha", o.alpha_tr);
  rd.scalar("outer", "beta", o.beta_tr);
  rd.scalar("outer", "eta1", o.eta1);
  rd.scalar("outer", "eta2", o.eta2);
  rd.scalar("outer", "eps_u", o.eps_u);
  rd.scalar("outer", "eps_p", o.eps_p);
  rd.scalar("outer", "w_p", o.w_p);
  rd.scalar("outer", "inner_iters", o.inner_iters);
  rd.scalar("outer", "c_eps", o.c_eps);
  rd.scalar("outer", "inner_eps_floor", o.inner_eps_floor);
  try {
    o.check();
  } catch (const Error& e) {
    rd.fail("outer", "", e.what());
  }

  cfg.engines = default_engine_settings(sc.model);
  DrSettings& d = cfg.engines.dr;
  rd.scalar("dr", "alpha", d.alpha);
  rd.scalar("dr", "sigma", d.sigma);
  rd.scalar("dr", "r_s", d.r_s);
  rd.scalar("dr", "eps", d.eps);
  rd.scalar("dr", "max_iters", d.max_iters);
  rd.scalar("dr", "warm_start", d.warm_start);
  rd.scalar("dr", "dense_threshold", d.dense_threshold);
  rd.scalar("dr", "scaling_iters", d.scaling_iters);
  if (!(d.alpha > 0.0 && d.alpha < 1.0)) rd.fail("dr", "alpha", "must lie in (0, 1)");
  if (!(d.sigma > 0.0)) rd.fail("dr", "sigma", "must be positive");
  if (!(d.r_s > 0.0)) rd.fail("dr", "r_s", "must be positive");
  if (d.max_iters < 1) rd.fail("dr", "max_iters", "must be at least 1");

  FullAdmmSettings& f = cfg.engines.fulladmm;
  rd.scalar("fulladmm", "rho", f.rho);
  rd.scalar("fulladmm", "max_iters", f.max_iters);
  rd.scalar("fulladmm", "eps_p", f.eps_p);
  f.eps_d = f.eps_p;
  rd.scalar("fulladmm", "eps_d", f.eps_d);
  rd.scalar("fulladmm", "direct_threshold", f.direct_threshold);
  rd.scalar("fulladmm", "pcg_tol", f.pcg_tol);
  rd.scalar("fulladmm", "pcg_iters", f.pcg_iters);
  f.block2 = d;
  if (!(f.rho > 0.0)) rd.fail("fulladmm", "rho", "must be positive");
  if (f.max_iters < 1) rd.fail("fulladmm", "max_iters", "must be at least 1");

  rd.scalar("validate", "n_random", cfg.validation.n_random);
  rd.scalar("validate", "n_edge", cfg.validation.n_edge);
  rd.scalar("validate", "seed", cfg.validation.seed);
  if (cfg.validation.n_random < 0 || cfg.validation.n_edge < 0) rd.fail("validate", "", "sample counts must be >= 0");

  // Scenario-level invariants, reported against the section that sets them.
  const auto violations = validate_scenario(sc.instantiate());
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v.path + ": " + v.message;
    const std::string section = boost::algorithm::starts_with(violations.front().path, "uncertainty") ? "uncertainty"
                                : boost::algorithm::starts_with(violations.front().path, "obstacle")  ? "obstacles"
                                                                                                      : "model";
    rd.fail(section, "", "invalid scenario: " + msg);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

namespace {

std::string join(const Vec& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  return os.str();
}

std::string join_rows(const Mat& m) {
  Vec flat(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat(r * m.cols() + c) = m(r, c);
  return join(flat);
}

}  // namespace

void write_uncertainty_section(std::ostream& os, const UncertaintySet& set, int n_x, int horizon) {
  const int dim = (horizon + 1) * n_x;
  if (set.s_metric.rows() != dim || set.gamma.rows() != dim || !set.gamma.isIdentity(0.0))
    throw DimensionError("write_uncertainty_section: expected Gamma = I and a (T + 1) n_x metric");
  Mat expected = Mat::Zero(dim, dim);
  const Mat s0 = set.s_metric.topLeftCorner(n_x, n_x);
  const Mat sd = horizon > 0 ? Mat(set.s_metric.block(n_x, n_x, n_x, n_x)) : s0;
  expected.topLeftCorner(n_x, n_x) = s0;
  for (int k = 1; k <= horizon; ++k) expected.block(k * n_x, k * n_x, n_x, n_x) = sd;
  if (expected != set.s_metric) throw DataError("write_uncertainty_section: S is not blkdiag(S_0, S_d, ..., S_d)");
  os << std::setprecision(17) << "[uncertainty]\ngamma = identity\ntau = " << set.tau << "\ns0 = " << join_rows(s0)
     << "\nsd = " << join_rows(sd) << "\n";
}

void write_config(std::ostream& os, const RunConfig& config) {
  const ScenarioTemplate& sc = config.scenario;
  os << std::setprecision(17);
  os << "[model]\nname = " << to_string(sc.model) << "\ndt = " << sc.dt << "\nx0 = " << join(sc.x0_bar) << "\n";
  if (sc.initial_control) os << "initial_control = " << join(*sc.initial_control) << "\n";
  if (sc.control_min) os << "control_min = " << join(*sc.control_min) << "\n";
  if (sc.control_max) os << "control_max = " << join(*sc.control_max) << "\n";
  if (sc.state_min) os << "state_min = " << join(*sc.state_min) << "\n";
  if (sc.state_max) os << "state_max = " << join(*sc.state_max) << "\n";
  if (sc.goal) os << "goal = " << join(sc.goal->center) << "\ngoal_half_width = " << sc.goal->half_width << "\n";
  if (sc.model == ModelId::unicycle)
    os << "v_max = " << sc.unicycle.v_max << "\nomega_max = " << sc.unicycle.omega_max << "\n";
  if (sc.model == ModelId::quadcopter)
    os << "mass = " << sc.quadcopter.mass << "\nthrust_min = " << sc.quadcopter.thrust_min
       << "\nthrust_max = " << sc.quadcopter.thrust_max << "\ntorque_max = " << sc.quadcopter.torque_max << "\n";
  os << "\n[horizon]\nT = " << sc.horizon << "\n\n";
  os << "[uncertainty]\ngamma = identity\ntau = " << sc.tau << "\ns0 = " << join_rows(sc.s0)
     << "\nsd = " << join_rows(sc.sd) << "\n\n";
  os << "[obstacles]\nmargin = " << sc.obstacle_margin << "\n";
  for (std::size_t i = 0; i < sc.obstacles.size(); ++i)
    os << "o" << i << " = " << join(sc.obstacles[i].center) << " " << sc.obstacles[i].radius << "\n";
  os << "\n[weights]\nr_u = " << join_rows(sc.r_u) << "\nr_k = " << join_rows(sc.r_k) << "\n\n";
  const OuterSettings& o = config.outer;
  os << "[outer]\nmax_outer = " << o.max_outer << "\nr0 = " << o.r0 << "\nr_min = " << o.r_min << "\nrho0 = " << o.rho0
     << "\nrho_max = " << o.rho_max << "\nalpha = " << o.alpha_tr << "\nbeta = " << o.beta_tr << "\neta1 = " << o.eta1
     << "\neta2 = " << o.eta2 << "\neps_u = " << o.eps_u << "\neps_p = " << o.eps_p << "\nw_p = " << o.w_p
     << "\ninner_iters = " << o.inner_iters << "\nc_eps = " << o.c_eps << "\ninner_eps_floor = " << o.inner_eps_floor
     << "\n\n";
  const DrSettings& d = config.engines.dr;
  os << "[dr]\nalpha = " << d.alpha << "\nsigma = " << d.sigma << "\nr_s = " << d.r_s << "\neps = " << d.eps
     << "\nmax_iters = " << d.max_iters << "\nwarm_start = " << (d.warm_start ? "true" : "false")
     << "\ndense_threshold = " << d.dense_threshold << "\nscaling_iters = " << d.scaling_iters << "\n\n";
  const FullAdmmSettings& f = config.engines.fulladmm;
  os << "[fulladmm]\nrho = " << f.rho << "\nmax_iters = " << f.max_iters << "\neps_p = " << f.eps_p
     << "\neps_d = " << f.eps_d << "\ndirect_threshold = " << f.direct_threshold << "\npcg_tol = " << f.pcg_tol
     << "\npcg_iters = " << f.pcg_iters << "\n\n";
  os << "[validate]\nn_random = " << config.validation.n_random << "\nn_edge = " << config.validation.n_edge
     << "\nseed = " << config.validation.seed << "\n";
}

}  // namespace nrto
