// Copyright 2026 The refgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "refgame/game.hpp"

namespace refgame {

using json = nlohmann::json;

struct ModelSection {
  std::string family = "gbm";
  double mu = 0.05;
  double sigma = 0.25;
  double r = 0.5;
  double theta = 1.0;  // ou: mean-reversion speed
  double mean = 0.0;   // ou: long-run level
  BoundaryType lower = BoundaryType::natural;
  BoundaryType upper = BoundaryType::natural;
  double x_lo = 0.01;
  double x_hi = 50.0;
};

struct PayoffSection {
  std::string builtin = "pollution";
  Variant variant = Variant::running;
  json params = json::object();
};

struct McSection {
  std::size_t n_paths = 10000;
  double dt = 1e-3;
  double t_max = 16.0;
  std::uint64_t seed = 0;
  bool crn = true;
  ReflectionScheme scheme = ReflectionScheme::bridge;
  std::vector<double> starts;
  std::size_t nash_paths = 4000;
  double nash_dt = 2e-3;
  std::optional<double> nash_x0;
  std::size_t counter_jump_paths = 100;
  std::size_t stopping_paths = 4000;
  double bias_budget = 5e-3;  // relative discretization allowance in MC agreement
};

struct OutputSection {
  std::string dir = "out";
  std::vector<std::string> formats = {"json", "csv"};
  std::size_t dump_paths = 0;
  std::size_t value_points = 400;
};

struct SolverSection {
  int n_start = 8;
  int max_iter = 200;
  double tol = 1e-13;
  std::size_t grid_points = 2000;
  double hjb_eq_tol = 1e-7;
  double hjb_ineq_tol = 1e-9;
};

struct RunConfig {
  json raw;
  ModelSection model;
  PayoffSection payoffs;
  PollutionConfig pollution;
  SolverSection solver;
  McSection mc;
  OutputSection output;
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorKind::config, path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::config, path_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  void get_opt(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  bool has(const char* key) const { return j_.contains(key); }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(ErrorKind::config, path_ + "." + k + ": unknown field");
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) fail(ErrorKind::config, field + ": " + what);
}

inline BoundaryType boundary_from(const std::string& s, const std::string& field) {
  if (s == "natural") return BoundaryType::natural;
  if (s == "entrance_not_exit") return BoundaryType::entrance_not_exit;
  fail(ErrorKind::config, field + ": expected natural or entrance_not_exit");
}

}  // namespace detail

/// Parses and validates a run configuration. Every violation is a config
/// error naming the offending field.
inline RunConfig parse_config(const json& j) {
  RunConfig c;
  c.raw = j;
  if (!j.is_object()) fail(ErrorKind::config, "config: expected a JSON object");
  detail::Reader top(j, "config");
  for (const char* s : {"model", "payoffs", "pollution", "solver", "mc", "output"}) {
    json dummy;
    top.get(s, dummy);
  }
  top.done();

  if (j.contains("model")) {
    detail::Reader r(j["model"], "model");
    auto& m = c.model;
    std::string lower = "natural", upper = "natural";
    r.get("family", m.family);
    r.get("mu", m.mu);
    r.get("sigma", m.sigma);
    r.get("r", m.r);
    r.get("theta", m.theta);
    r.get("mean", m.mean);
    r.get("lower_boundary", lower);
    r.get("upper_boundary", upper);
    r.get("x_lo", m.x_lo);
    r.get("x_hi", m.x_hi);
    r.done();
    m.lower = detail::boundary_from(lower, "model.lower_boundary");
    m.upper = detail::boundary_from(upper, "model.upper_boundary");
  }
  const auto& m = c.model;
  detail::require(m.family == "gbm" || m.family == "brownian" || m.family == "ou", "model.family",
                  "expected gbm, brownian or ou");
  detail::require(m.sigma > 0.0, "model.sigma", "must be positive");
  detail::require(m.r > 0.0, "model.r", "must be positive");
  detail::require(m.x_lo < m.x_hi, "model.x_lo", "must be below model.x_hi");
  if (m.family == "gbm") detail::require(m.x_lo > 0.0, "model.x_lo", "must be positive for gbm");
  if (m.family == "ou") detail::require(m.theta > 0.0, "model.theta", "must be positive");

  if (j.contains("payoffs")) {
    detail::Reader r(j["payoffs"], "payoffs");
    std::string variant = "running";
    r.get("builtin", c.payoffs.builtin);
    r.get("variant", variant);
    r.get("params", c.payoffs.params);
    r.done();
    detail::require(variant == "running" || variant == "plain", "payoffs.variant", "expected running or plain");
    c.payoffs.variant = variant == "running" ? Variant::running : Variant::plain;
  }

  if (j.contains("pollution")) {
    detail::Reader r(j["pollution"], "pollution");
    auto& p = c.pollution;
    r.get("lambda", p.lambda);
    r.get("delta", p.delta);
    r.get("alpha1", p.alpha1);
    r.get("alpha2", p.alpha2);
    r.get_opt("beta1", p.beta1);
    r.get_opt("beta2", p.beta2);
    r.get("state_scale", p.state_scale);
    r.done();
  }
  c.pollution.mu_hat = m.mu;
  c.pollution.sigma_hat = m.sigma;
  c.pollution.r = m.r;

  if (j.contains("solver")) {
    detail::Reader r(j["solver"], "solver");
    auto& s = c.solver;
    r.get("n_start", s.n_start);
    r.get("max_iter", s.max_iter);
    r.get("tol", s.tol);
    r.get("grid_points", s.grid_points);
    r.get("hjb_eq_tol", s.hjb_eq_tol);
    r.get("hjb_ineq_tol", s.hjb_ineq_tol);
    r.done();
  }
  const auto& s = c.solver;
  detail::require(s.n_start >= 1, "solver.n_start", "must be at least 1");
  detail::require(s.max_iter >= 1, "solver.max_iter", "must be at least 1");
  detail::require(s.tol > 0.0, "solver.tol", "must be positive");
  detail::require(s.hjb_eq_tol > 0.0, "solver.hjb_eq_tol", "must be positive");
  detail::require(s.hjb_ineq_tol > 0.0, "solver.hjb_ineq_tol", "must be positive");
  detail::require(s.grid_points >= 10, "solver.grid_points", "must be at least 10");

  if (!j.contains("mc") || !j["mc"].is_object() || !j["mc"].contains("seed"))
    fail(ErrorKind::config, "mc.seed: required (runs must be reproducible)");
  {
    detail::Reader r(j["mc"], "mc");
    auto& mc = c.mc;
    std::string scheme = "bridge";
    r.get("n_paths", mc.n_paths);
    r.get("dt", mc.dt);
    r.get("t_max", mc.t_max);
    r.get("seed", mc.seed);
    r.get("crn", mc.crn);
    r.get("scheme", scheme);
    r.get("starts", mc.starts);
    r.get("nash_paths", mc.nash_paths);
    r.get("nash_dt", mc.nash_dt);
    r.get_opt("nash_x0", mc.nash_x0);
    r.get("counter_jump_paths", mc.counter_jump_paths);
    r.get("stopping_paths", mc.stopping_paths);
    r.get("bias_budget", mc.bias_budget);
    r.done();
    detail::require(scheme == "bridge" || scheme == "projection", "mc.scheme", "expected bridge or projection");
    mc.scheme = scheme == "bridge" ? ReflectionScheme::bridge : ReflectionScheme::projection;
    detail::require(mc.n_paths >= 2, "mc.n_paths", "must be at least 2");
    detail::require(mc.nash_paths >= 2, "mc.nash_paths", "must be at least 2");
    detail::require(mc.dt > 0.0, "mc.dt", "must be positive");
    detail::require(mc.bias_budget >= 0.0, "mc.bias_budget", "must be nonnegative");
    detail::require(mc.nash_dt > 0.0, "mc.nash_dt", "must be positive");
    detail::require(mc.t_max >= mc.dt, "mc.t_max", "must be at least mc.dt");
  }

  if (j.contains("output")) {
    detail::Reader r(j["output"], "output");
    auto& o = c.output;
    r.get("dir", o.dir);
    r.get("formats", o.formats);
    r.get("dump_paths", o.dump_paths);
    r.get("value_points", o.value_points);
    r.done();
    for (const auto& f : o.formats)
      detail::require(f == "json" || f == "csv", "output.formats", "expected entries json or csv");
    detail::require(o.value_points >= 2, "output.value_points", "must be at least 2");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot read config file " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, "config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

/// Builds the game named in the payoffs section; the factory receives the
/// whole configuration.
using GameFactory = std::function<Game(const RunConfig&)>;

inline std::map<std::string, GameFactory>& game_registry() {
  static std::map<std::string, GameFactory> reg = {
      {"pollution",
       [](const RunConfig& c) {
         if (c.model.family != "gbm") fail(ErrorKind::config, "payoffs.builtin pollution needs model.family gbm");
         if (!c.payoffs.params.empty()) fail(ErrorKind::config, "payoffs.params: pollution takes no params");
         auto g = pollution_game(c.pollution, c.payoffs.variant, c.model.x_lo, c.model.x_hi);
         g.x_lo = c.model.x_lo;
         g.x_hi = c.model.x_hi;
         g.model.lower = c.model.lower;
         g.model.upper = c.model.upper;
         return g;
       }},
      {"symmetric_linear",
       [](const RunConfig& c) {
         if (c.model.family != "brownian" || c.model.mu != 0.0)
           fail(ErrorKind::config, "payoffs.builtin symmetric_linear needs model.family brownian with mu = 0");
         if (c.payoffs.variant != Variant::plain) fail(ErrorKind::config, "payoffs.variant: symmetric_linear is plain");
         double s = 1.0;
         if (c.payoffs.params.is_object() && c.payoffs.params.contains("s")) {
           try {
             s = c.payoffs.params.at("s").get<double>();
           } catch (const json::exception&) {
             fail(ErrorKind::config, "payoffs.params.s: wrong type");
           }
         }
         detail::require(s > 0.0, "payoffs.params.s", "must be positive");
         auto g = symmetric_linear_game(c.model.sigma, c.model.r, s);
         g.x_lo = c.model.x_lo;
         g.x_hi = c.model.x_hi;
         return g;
       }},
  };
  return reg;
}

inline void register_game(const std::string& name, GameFactory f) { game_registry()[name] = std::move(f); }

inline Game make_game(const RunConfig& c) {
  const auto& reg = game_registry();
  const auto it = reg.find(c.payoffs.builtin);
  if (it == reg.end()) fail(ErrorKind::config, "payoffs.builtin: unknown game '" + c.payoffs.builtin + "'");
  return it->second(c);
}

inline SolverOptions solver_options(const RunConfig& c, const Game& g) {
  SolverOptions o;
  o.x_lo = g.x_lo;
  o.x_hi = g.x_hi;
  o.n_start = c.solver.n_start;
  o.max_iter = c.solver.max_iter;
  o.tol = c.solver.tol;
  return o;
}

inline ControlMcConfig control_mc(const RunConfig& c) {
  ControlMcConfig mc;
  mc.n_paths = c.mc.n_paths;
  mc.sim.dt = c.mc.dt;
  mc.sim.horizon = c.mc.t_max;
  mc.sim.seed = c.mc.seed;
  mc.sim.scheme = c.mc.scheme;
  return mc;
}

inline PipelineOptions pipeline_options(const RunConfig& c, const Game& g) {
  PipelineOptions o;
  o.solver = solver_options(c, g);
  o.grid_points = c.solver.grid_points;
  o.hjb.eq_tol = c.solver.hjb_eq_tol;
  o.hjb.ineq_tol = c.solver.hjb_ineq_tol;
  o.existence.x_lo = g.x_lo;
  o.existence.x_hi = g.x_hi;
  o.existence.seed = c.mc.seed;
  o.starts = c.mc.starts;
  o.mc = control_mc(c);
  o.nash.mc = control_mc(c);
  o.nash.mc.n_paths = c.mc.nash_paths;
  o.nash.mc.sim.dt = c.mc.nash_dt;
  // Deviation paths can wander far; keep the truncation wide and report it.
  o.nash.mc.sim.x_lo = g.model.interval.lo;
  o.nash.mc.sim.x_hi = g.model.interval.hi;
  o.nash.crn = c.mc.crn;
  o.nash_x0 = c.mc.nash_x0;
  o.counter_jump_paths = c.mc.counter_jump_paths;
  o.bias_budget = c.mc.bias_budget;
  return o;
}

}  // namespace refgame
