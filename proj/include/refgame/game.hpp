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

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "refgame/checks.hpp"
#include "refgame/control_game.hpp"
#include "refgame/diffusion.hpp"
#include "refgame/errors.hpp"
#include "refgame/fundamental_pair.hpp"
#include "refgame/path_simulator.hpp"
#include "refgame/pollution.hpp"
#include "refgame/stopping_game.hpp"

namespace refgame {

enum class Variant { plain, running };

inline const char* to_string(Variant v) { return v == Variant::plain ? "plain" : "running"; }

/// Everything the pipeline needs about one game: dynamics, fundamental pair,
/// marginal payoffs, the data of the value construction and the functionals
/// used by the simulator.
struct Game {
  std::string name;
  Variant variant = Variant::plain;
  DiffusionModel model;
  FundamentalPair pair;
  PayoffFunctions pf;
  StoppingData d1, d2;
  RunningProfits running;
  ControlPayoffs control;
  double x_lo = 0.0, x_hi = 0.0;
  std::optional<PollutionConfig> pollution;
  std::optional<PollutionPayoffs> pollution_payoffs;
  std::optional<GammaRoots> gamma;
  std::optional<HatX> hat_x;
};

inline Game pollution_game(const PollutionConfig& c, Variant v = Variant::running, double x_lo = 0.01,
                           double x_hi = 50.0) {
  Game g;
  g.name = "pollution";
  g.variant = v;
  g.pollution = c;
  g.gamma = gamma_roots(c);
  auto pp = build_payoffs(c);
  g.hat_x = hat_x_closed_form(c);
  g.model = pollution_model(c);
  g.pair = pollution_pair(c);
  g.pf = pp.generic;
  if (v == Variant::running) {
    g.d1 = pp.running1;
    g.d2 = pp.running2;
    g.running = pp.running;
    g.control = linear_payoffs(pp.running, c.alpha1, 0.0, c.alpha2, 0.0);
  } else {
    g.d1 = plain_data(pp.generic, Player::one);
    g.d2 = plain_data(pp.generic, Player::two);
    g.control = zhu_payoffs(pp.generic);
  }
  g.pollution_payoffs = std::move(pp);
  g.x_lo = x_lo / c.state_scale;
  g.x_hi = x_hi / c.state_scale;
  return g;
}

/// Brownian motion with linear marginal payoffs G1 = s + x, L1 = x - s,
/// G2 = s - x, L2 = -s - x; symmetric under x -> -x.
inline Game symmetric_linear_game(double sigma = 1.0, double r = 0.5, double s = 1.0, double half_width = 12.0) {
  Game g;
  g.name = "symmetric_linear";
  g.model = brownian_model(0.0, sigma, r);
  g.pair = exponential_pair(0.0, sigma, r);
  auto& p = g.pf;
  const RealFn one = [](double) { return 1.0; }, minus_one = [](double) { return -1.0; },
               zero = [](double) { return 0.0; };
  p.G1 = [s](double x) { return s + x; };
  p.dG1 = one;
  p.d2G1 = zero;
  p.L1 = [s](double x) { return x - s; };
  p.dL1 = one;
  p.G2 = [s](double x) { return s - x; };
  p.dG2 = minus_one;
  p.d2G2 = zero;
  p.L2 = [s](double x) { return -s - x; };
  p.dL2 = minus_one;
  g.d1 = plain_data(p, Player::one);
  g.d2 = plain_data(p, Player::two);
  g.control = zhu_payoffs(p);
  g.x_lo = -half_width;
  g.x_hi = half_width;
  return g;
}

struct Solution {
  ThresholdEquilibrium eq;
  StoppingValues sv;
  Kappas kappas;
  ControlValues cv;
  /// Running variant: distance between the threshold-system root and the
  /// root of the running-data smooth-fit equations.
  std::optional<double> route_gap;
};

namespace detail {

inline Solution complete_solution(const Game& g, ThresholdEquilibrium eq, std::optional<double> gap) {
  auto sv = in_stage("stopping_values", [&] { return stopping_values(eq.a_star, eq.b_star, g.d1, g.d2, g.pair); });
  if (g.variant == Variant::running) eq.smooth_fit = sv.smooth_fit();
  eq.v1_coeffs = sv.v1.c;
  eq.v2_coeffs = sv.v2.c;
  const auto k = in_stage("kappas", [&] { return kappas(sv, g.model, g.running); });
  ControlValuesOptions co;
  co.x_lo = g.x_lo;
  co.x_hi = g.x_hi;
  co.use_antiderivatives = g.pair.has_antiderivatives();
  auto cv = in_stage("control_values", [&] { return ControlValues(sv, k, co); });
  return {eq, sv, k, cv, gap};
}

}  // namespace detail

/// Thresholds, stopping values, kappas and control values. Errors carry the
/// stage that raised them.
inline Solution solve_game(const Game& g, SolverOptions opt = {}) {
  if (opt.x_lo == 0.0 && opt.x_hi == 0.0) {
    opt.x_lo = g.x_lo;
    opt.x_hi = g.x_hi;
  }
  if (g.hat_x && !opt.hat_x1) {
    opt.hat_x1 = g.hat_x->zeta1;
    opt.hat_x2 = g.hat_x->zeta2;
  }
  auto eq = in_stage("solve_thresholds", [&] { return solve_thresholds(g.pf, g.model, g.pair, opt); });
  std::optional<double> gap;
  if (g.variant == Variant::running) {
    const auto alt =
        in_stage("solve_smooth_fit", [&] { return solve_smooth_fit(g.d1, g.d2, g.pair, g.pf, g.model, opt); });
    gap = std::max(std::abs(alt.a_star - eq.a_star), std::abs(alt.b_star - eq.b_star));
  }
  return detail::complete_solution(g, std::move(eq), gap);
}

/// Values at given thresholds, e.g. read back from an artifact.
inline Solution solution_at(const Game& g, double a, double b) {
  ThresholdEquilibrium eq;
  eq.a_star = a;
  eq.b_star = b;
  eq.residuals = threshold_residuals(g.pf, g.pair, a, b, true);
  auto s = detail::complete_solution(g, std::move(eq), std::nullopt);
  s.eq.smooth_fit = s.sv.smooth_fit();
  return s;
}

/// Grid [a/2, 2b] for positive thresholds, else [a - w, b + w] with w = b - a,
/// clipped to the computational window.
inline std::vector<double> check_grid(const Game& g, const Solution& s, std::size_t n = 2000) {
  const double a = s.eq.a_star, b = s.eq.b_star;
  double lo = a > 0.0 ? 0.5 * a : a - (b - a);
  double hi = a > 0.0 ? 2.0 * b : b + (b - a);
  lo = std::max(lo, g.x_lo);
  hi = std::min(hi, g.x_hi);
  return linspace(lo, hi, n);
}

/// Default starting points: below a, inside (a, b) and above b.
inline std::vector<double> default_starts(const Solution& s) {
  const double a = s.eq.a_star, b = s.eq.b_star, m = 0.5 * (a + b);
  if (a > 0.0) return {0.5 * a, a + 0.25 * (b - a), m, b - 0.25 * (b - a), 2.0 * b};
  return {a - 0.5 * (b - a), a + 0.25 * (b - a), m, b - 0.25 * (b - a), b + 0.5 * (b - a)};
}

struct McRow {
  double x0 = 0.0;
  double V1 = 0.0, V2 = 0.0;
  ControlEstimate est;
  double budget1 = 0.0, budget2 = 0.0;
  bool ok = true;
};

/// |Psi_i - V_i| <= z se + rel |V_i| at each start point under the
/// equilibrium strategies.
inline std::vector<McRow> mc_agreement(const Game& g, const Solution& s, const std::vector<double>& starts,
                                       const ControlMcConfig& mc, double z = 3.0, double rel = 5e-3) {
  std::vector<McRow> rows;
  const auto [nu, xi] = equilibrium_strategies(s.eq.a_star, s.eq.b_star);
  for (double x0 : starts) {
    McRow row;
    row.x0 = x0;
    row.V1 = s.cv.V1(x0);
    row.V2 = s.cv.V2(x0);
    row.est = control_payoff_mc(g.model, g.control, nu, xi, x0, mc);
    row.budget1 = z * row.est.psi1.se + rel * std::abs(row.V1);
    row.budget2 = z * row.est.psi2.se + rel * std::abs(row.V2);
    row.ok = std::abs(row.est.psi1.mean - row.V1) <= row.budget1 &&
             std::abs(row.est.psi2.mean - row.V2) <= row.budget2 && row.est.reliable;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct StoppingRow {
  double x = 0.0;
  double v1 = 0.0, v2 = 0.0;
  StoppingEstimate est;
  double budget1 = 0.0, budget2 = 0.0;
  bool ok = true;
};

/// Hitting-time MC of the stopping functionals at (a*, b*) against v1, v2.
inline std::vector<StoppingRow> stopping_agreement(const Game& g, const Solution& s, const std::vector<double>& xs,
                                                   const StoppingMcConfig& cfg, double z = 3.0, double rel = 5e-3) {
  std::vector<StoppingRow> rows;
  for (double x : xs) {
    StoppingRow row;
    row.x = x;
    row.v1 = s.sv.v1(x);
    row.v2 = s.sv.v2(x);
    row.est = stopping_payoff_mc(g.model, g.d1, g.d2, s.eq.a_star, s.eq.b_star, x, cfg);
    row.budget1 = z * row.est.J1.se + rel * std::abs(row.v1);
    row.budget2 = z * row.est.J2.se + rel * std::abs(row.v2);
    row.ok = std::abs(row.est.J1.mean - row.v1) <= row.budget1 && std::abs(row.est.J2.mean - row.v2) <= row.budget2 &&
             row.est.reliable;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct StoppingDeviationRow {
  Player player = Player::one;
  double level = 0.0;
  Estimate value;
  Estimate diff;  // deviation minus equilibrium
  double bound = 0.0;
  bool ok = true;
};

/// One player moves its stopping threshold by shift * (b* - a*) while the
/// other keeps its own; both sides minimize, so a pass means the deviation
/// lowers the deviator's cost by less than z paired standard errors.
inline std::vector<StoppingDeviationRow> stopping_deviations(const Game& g, const Solution& s, double x,
                                                             const std::vector<double>& shifts,
                                                             StoppingMcConfig cfg, double z = 3.0) {
  cfg.keep_samples = true;
  const double a = s.eq.a_star, b = s.eq.b_star, w = b - a;
  const auto eq = stopping_payoff_mc(g.model, g.d1, g.d2, a, b, x, cfg);
  std::vector<StoppingDeviationRow> rows;
  auto add = [&](Player p, double level, const StoppingEstimate& est) {
    StoppingDeviationRow row;
    row.player = p;
    row.level = level;
    const bool one = p == Player::one;
    row.value = one ? est.J1 : est.J2;
    row.diff = one ? paired_difference(est.samples1, eq.samples1) : paired_difference(est.samples2, eq.samples2);
    row.bound = z * row.diff.se + 1e-12 * std::max(1.0, std::abs(row.value.mean));
    row.ok = row.diff.mean >= -row.bound;
    rows.push_back(row);
  };
  for (double sh : shifts) {
    const double a1 = a + sh * w;
    if (a1 < b && g.model.interval.contains(a1))
      add(Player::one, a1, stopping_payoff_mc(g.model, g.d1, g.d2, a1, b, x, cfg));
    const double b1 = b + sh * w;
    if (b1 > a && g.model.interval.contains(b1))
      add(Player::two, b1, stopping_payoff_mc(g.model, g.d1, g.d2, a, b1, x, cfg));
  }
  return rows;
}

struct PipelineOptions {
  SolverOptions solver;
  std::size_t grid_points = 2000;
  HjbOptions hjb;
  ExistenceOptions existence;
  bool run_mc = true;
  std::vector<double> starts;  // empty: default_starts
  ControlMcConfig mc;
  double bias_budget = 5e-3;
  bool run_nash = true;
  std::optional<double> nash_x0;
  NashOptions nash;
  bool run_counter_jump = true;
  std::size_t counter_jump_paths = 100;
  double counter_jump_excess = 0.5;
  double counter_jump_t0 = 1.0;
};

struct PipelineReport {
  Game game;
  Solution solution;
  ConditionReport existence;
  InequalityReport variational;
  InequalityReport hjb;
  LinkErrors link;
  std::vector<McRow> mc;
  std::optional<NashReport> nash;
  std::optional<PathwiseComparison> counter_jump;
  bool ok = true;
};

/// Pathwise comparison of a reflect-then-counter-jump strategy of player 2
/// with its lump-at-a variant (pollution games with beta2 only).
inline PathwiseComparison counter_jump_check(const Game& g, const Solution& s, const PipelineOptions& opt) {
  if (!g.pollution || !g.pollution->beta2) fail(ErrorKind::config, "counter-jump check needs pollution.beta2");
  CounterJumpSpec cj;
  cj.alpha2 = g.pollution->alpha2;
  cj.beta2 = *g.pollution->beta2;
  cj.a = s.eq.a_star;
  cj.b = s.eq.b_star;
  cj.excess = std::min(opt.counter_jump_excess, 0.9 * (s.eq.a_star - g.model.interval.lo));
  cj.t0 = opt.counter_jump_t0;
  cj.profit2 = g.pollution_payoffs->running.profit2;
  auto sim = opt.mc.sim;
  sim.horizon = std::max(sim.dt, std::min(sim.horizon, 2.0 * cj.t0));
  const double x0 = 0.5 * (s.eq.a_star + s.eq.b_star);
  return counter_jump_dominance(g.model, cj, x0, opt.counter_jump_paths, sim);
}

/// Runs the full chain for one game. Failures of checks are report
/// entries; construction errors propagate tagged with their stage.
inline PipelineReport run_pipeline(const Game& g, const PipelineOptions& opt) {
  auto sol = solve_game(g, opt.solver);
  PipelineReport rep{g, std::move(sol), {}, {}, {}, {}, {}, {}, {}, true};
  const auto& s = rep.solution;
  auto eo = opt.existence;
  if (eo.x_lo == 0.0 && eo.x_hi == 0.0) {
    eo.x_lo = g.x_lo;
    eo.x_hi = g.x_hi;
  }
  rep.existence = in_stage("check_existence", [&] { return check_existence(g.pf, g.model, g.pair, eo); });
  const auto grid = check_grid(g, s, opt.grid_points);
  rep.variational = in_stage("verify_variational", [&] { return verify_variational(s.sv, g.model, grid); });
  rep.hjb = in_stage("verify_hjb", [&] { return verify_hjb(s.cv, g.model, grid, g.running, opt.hjb); });
  rep.link = in_stage("link_errors", [&] { return link_errors(s.cv, grid); });
  rep.ok = !rep.existence.any_fail() && rep.variational.ok() && rep.hjb.ok() && rep.link.construction <= 1e-9 &&
           rep.link.finite_difference <= 1e-6;
  if (opt.run_mc) {
    const auto starts = opt.starts.empty() ? default_starts(s) : opt.starts;
    rep.mc = in_stage("mc_agreement", [&] { return mc_agreement(g, s, starts, opt.mc, 3.0, opt.bias_budget); });
    for (const auto& r : rep.mc) rep.ok = rep.ok && r.ok;
  }
  if (opt.run_nash) {
    const double x0 = opt.nash_x0.value_or(0.5 * (s.eq.a_star + s.eq.b_star));
    rep.nash = in_stage("verify_nash",
                        [&] { return verify_nash(g.model, g.control, s.eq.a_star, s.eq.b_star, x0, opt.nash); });
    rep.ok = rep.ok && rep.nash->ok;
  }
  if (opt.run_counter_jump && g.pollution && g.pollution->beta2) {
    rep.counter_jump = in_stage("counter_jump", [&] { return counter_jump_check(g, s, opt); });
    rep.ok = rep.ok && rep.counter_jump->ok;
  }
  return rep;
}

}  // namespace refgame
