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

// Acceptance run on the reference pollution game. Prints one PASS/FAIL line
// per criterion and exits nonzero if any criterion fails. `--only N[,M...]`
// restricts the run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "refgame/game.hpp"

using namespace refgame;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PollutionConfig reference_config() { return PollutionConfig{}; }

const Game& game() {
  static const Game g = pollution_game(reference_config());
  return g;
}

const Solution& solution() {
  static const Solution s = solve_game(game());
  return s;
}

// Audits of every equilibrium and deviation run, for the structural checks.
struct AuditLog {
  std::size_t runs = 0, paths = 0, simultaneous = 0;
  double band_excess = 0.0, flat_off = 0.0;
  void add(const ControlEstimate& e) {
    ++runs;
    paths += e.n_paths;
    simultaneous += e.audit.simultaneous_jumps;
    band_excess = std::max(band_excess, e.audit.band_excess);
    flat_off += e.audit.flat_off_nu + e.audit.flat_off_xi;
  }
};
AuditLog audit_log;

Outcome c1_smooth_fit() {
  const auto& g = game();
  const auto t0 = Clock::now();
  const auto s = solve_game(g);
  // Rebuild v1, v2 from the thresholds alone.
  const auto r = solution_at(g, s.eq.a_star, s.eq.b_star);
  const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
  const double e1 = r.eq.smooth_fit[0], e2 = r.eq.smooth_fit[1];
  return {e1 <= 1e-8 && e2 <= 1e-8 && dt < 5.0,
          fmt("a*=%.10f b*=%.10f |v1'(a+)-G1'(a)|=%.2e |v2'(b-)-G2'(b)|=%.2e", s.eq.a_star, s.eq.b_star, e1, e2)};
}

Outcome c2_link() {
  const auto& g = game();
  const auto& s = solution();
  const auto e = link_errors(s.cv, check_grid(g, s, 2000), 1e-4);
  return {e.construction <= 1e-9 && e.finite_difference <= 1e-6,
          fmt("construction %.2e, central differences %.2e on 2000 points", e.construction, e.finite_difference)};
}

Outcome c3_hjb() {
  Outcome o;
  std::ostringstream os;
  for (auto v : {Variant::running, Variant::plain}) {
    const auto g = pollution_game(reference_config(), v);
    const auto s = solve_game(g);
    HjbOptions h;
    h.eq_tol = 1e-7;
    h.ineq_tol = 1e-9;
    const auto rep = verify_hjb(s.cv, g.model, check_grid(g, s, 2000), g.running, h);
    double eq = 0.0, ineq = 0.0;
    for (const auto& c : rep.clauses) {
      (c.tol == h.eq_tol ? eq : ineq) = std::max(c.tol == h.eq_tol ? eq : ineq, c.worst);
      if (!c.ok) os << " failing " << c.clause << " (" << c.worst << " at " << c.at << ")";
    }
    o.pass = o.pass && rep.ok();
    os << to_string(v) << ": equality " << fmt("%.2e", eq) << ", inequalities " << fmt("%.2e", ineq) << "; ";
  }
  o.detail = os.str();
  return o;
}

Outcome c4_mc() {
  const auto& g = game();
  const auto& s = solution();
  ControlMcConfig mc;
  mc.n_paths = 10000;
  mc.sim.dt = 1e-3;
  mc.sim.horizon = 16.0;
  mc.sim.seed = 20261016;
  const auto starts = default_starts(s);
  const auto rows = mc_agreement(g, s, starts, mc, 3.0, 5e-3);
  Outcome o;
  std::ostringstream os;
  for (const auto& r : rows) {
    audit_log.add(r.est);
    o.pass = o.pass && r.ok;
    os << fmt("x0=%.3f dV1=%.1e/%.1e dV2=%.1e/%.1e%s; ", r.x0, std::abs(r.est.psi1.mean - r.V1), r.budget1,
              std::abs(r.est.psi2.mean - r.V2), r.budget2, r.ok ? "" : " FAIL");
  }
  o.pass = o.pass && starts.front() < s.eq.a_star && starts.back() > s.eq.b_star;
  o.detail = os.str();
  return o;
}

Outcome c5_nash() {
  const auto& g = game();
  const auto& s = solution();
  NashOptions opt;
  opt.mc.n_paths = 4000;
  opt.mc.sim.dt = 2e-3;
  opt.mc.sim.horizon = 16.0;
  opt.mc.sim.seed = 777;
  opt.mc.sim.x_lo = g.model.interval.lo;
  opt.mc.sim.x_hi = g.model.interval.hi;
  const double x0 = 0.5 * (s.eq.a_star + s.eq.b_star);
  const auto rep = verify_nash(g.model, g.control, s.eq.a_star, s.eq.b_star, x0, opt);
  audit_log.add(rep.equilibrium);
  std::size_t shifts[2] = {0, 0}, inaction = 0, lumps = 0, ok = 0;
  double worst = -kInf;
  for (const auto& r : rep.rows) {
    const int p = r.player == Player::one ? 0 : 1;
    if (r.label == "shift_a" || r.label == "shift_b") ++shifts[p];
    if (r.label == "none") ++inaction;
    if (r.label == "lump") ++lumps;
    ok += r.ok;
    worst = std::max(worst, r.diff.mean - r.bound);
    audit_log.simultaneous += r.simultaneous_jumps;
  }
  const bool menu = shifts[0] == 8 && shifts[1] == 8 && inaction == 2 && lumps == 2;
  return {rep.ok && menu,
          fmt("%zu/%zu deviations within 3 se (worst margin %.2e); spearman %.2f, %.2f", ok, rep.rows.size(), worst,
              rep.spearman1, rep.spearman2)};
}

Outcome c6_stopping() {
  const auto& g = game();
  const auto& s = solution();
  const double a = s.eq.a_star, b = s.eq.b_star, w = b - a;
  StoppingMcConfig cfg;
  cfg.n_paths = 10000;
  cfg.dt = 1e-3;
  cfg.seed = 4242;
  const auto rows = stopping_agreement(g, s, {a + 0.25 * w, a + 0.5 * w, b - 0.25 * w}, cfg, 3.0, 5e-3);
  Outcome o;
  std::ostringstream os;
  for (const auto& r : rows) {
    o.pass = o.pass && r.ok;
    os << fmt("x=%.3f dv1=%.1e/%.1e dv2=%.1e/%.1e%s; ", r.x, std::abs(r.est.J1.mean - r.v1), r.budget1,
              std::abs(r.est.J2.mean - r.v2), r.budget2, r.ok ? "" : " FAIL");
  }
  StoppingMcConfig dcfg = cfg;
  dcfg.n_paths = 4000;
  const auto devs = stopping_deviations(g, s, a + 0.5 * w, {-0.1, -0.05, 0.05, 0.1}, dcfg, 3.0);
  std::size_t good = 0;
  for (const auto& d : devs) good += d.ok;
  o.pass = o.pass && good == devs.size() && devs.size() == 8;
  os << fmt("threshold deviations %zu/%zu without gain", good, devs.size());
  o.detail = os.str();
  return o;
}

Outcome c7_counter_jump() {
  const auto& g = game();
  const auto& s = solution();
  CounterJumpSpec spec;
  spec.alpha2 = 1.0;
  spec.beta2 = 2.0;
  spec.a = s.eq.a_star;
  spec.b = s.eq.b_star;
  spec.excess = 0.5;
  spec.t0 = 1.0;
  spec.profit2 = g.pollution_payoffs->running.profit2;
  SimConfig sim;
  sim.dt = 1e-3;
  sim.horizon = 2.0;
  sim.seed = 31;
  const auto c = counter_jump_dominance(g.model, spec, 0.5 * (spec.a + spec.b), 100, sim, 1e-10);
  return {c.ok && c.triggered == 100,
          fmt("%zu/100 paths triggered, max |gap - e^{-r t0}(beta2-alpha2) excess| = %.2e (expected gap %.6f)",
              c.triggered, c.max_error, c.rows.empty() ? 0.0 : c.rows.front().expected)};
}

// Differences of Psi2 between successive halvings of dt on a reflected OU
// game, all runs driven by the noise of the finest grid.
std::vector<Estimate> weak_order_differences(ReflectionScheme scheme, double* r1, double* r2) {
  const auto m = ou_model(2.0, 0.0, 1.0, 0.5);
  const auto pay = linear_payoffs({[](double x) { return x * x; }, [](double x) { return -x; }}, 1.0, 0.0, 1.0, 0.0);
  std::vector<std::vector<double>> samples;
  for (int k : {8, 4, 2, 1}) {
    ControlMcConfig mc;
    mc.n_paths = 40000;
    mc.sim.dt = 0.01 * k;
    mc.sim.refine = k;
    mc.sim.horizon = 4.0;
    mc.sim.seed = 1;
    mc.sim.scheme = scheme;
    mc.keep_samples = true;
    samples.push_back(control_payoff_mc(m, pay, Strategy::reflect_at(-1.0), Strategy::reflect_at(1.0), 0.3, mc).samples2);
  }
  std::vector<Estimate> d;
  for (int i = 0; i < 3; ++i) d.push_back(paired_difference(samples[i], samples[i + 1]));
  *r1 = d[0].mean / d[1].mean;
  *r2 = d[1].mean / d[2].mean;
  return d;
}

Outcome c8_structural() {
  Outcome o;
  std::ostringstream os;
  const auto& g = game();
  const auto& s = solution();

  // Wronskian of the analytic pair and of a numerically integrated pair.
  auto spread = [](const FundamentalPair& p, const std::vector<double>& grid) {
    double lo = kInf, hi = -kInf, mean = 0.0;
    for (double x : grid) {
      const double w = p.wronskian_at(x);
      lo = std::min(lo, w);
      hi = std::max(hi, w);
      mean += w / static_cast<double>(grid.size());
    }
    return (hi - lo) / std::abs(mean);
  };
  const double w_ana = spread(g.pair, geomspace(0.05, 20.0, 400));
  NumericPairOptions npo;
  npo.x_lo = 0.05;
  npo.x_hi = 20.0;
  npo.x_ref = 1.0;
  const auto num = numeric_pair(g.model, npo);
  const double w_num = spread(num, geomspace(0.06, 19.0, 400));
  const bool w_ok = w_ana <= 1e-6 && w_num <= 1e-6;
  os << fmt("wronskian spread %.1e (analytic) %.1e (numeric); ", w_ana, w_num);

  // Rescaling psi and phi.
  double resc = 0.0;
  for (auto [cp, cf] : {std::pair{7.0, 0.2}, std::pair{1e-3, 50.0}}) {
    Game h = g;
    h.pair = g.pair.rescaled(cp, cf);
    const auto t = solve_game(h);
    resc = std::max({resc, std::abs(t.eq.a_star - s.eq.a_star), std::abs(t.eq.b_star - s.eq.b_star)});
    for (double x : check_grid(g, s, 200))
      resc = std::max({resc, std::abs(t.sv.v1(x) - s.sv.v1(x)), std::abs(t.sv.v2(x) - s.sv.v2(x))});
  }
  const bool r_ok = resc <= 1e-9;
  os << fmt("rescaling change %.1e; ", resc);

  // Pathwise invariants over every equilibrium and deviation run so far, plus
  // a dedicated run if none has been made.
  if (audit_log.runs == 0) {
    ControlMcConfig mc;
    mc.n_paths = 2000;
    mc.sim.dt = 1e-3;
    const auto [nu, xi] = equilibrium_strategies(s.eq.a_star, s.eq.b_star);
    for (double x0 : default_starts(s)) audit_log.add(control_payoff_mc(g.model, g.control, nu, xi, x0, mc));
  }
  const bool p_ok = audit_log.band_excess <= 0.0 && audit_log.flat_off == 0.0 && audit_log.simultaneous == 0;
  os << fmt("%zu runs/%zu paths: band excess %.1e, flat-off mass %.1e, simultaneous jumps %zu; ", audit_log.runs,
            audit_log.paths, audit_log.band_excess, audit_log.flat_off, audit_log.simultaneous);

  double r1 = 0.0, r2 = 0.0;
  const auto d = weak_order_differences(ReflectionScheme::bridge, &r1, &r2);
  const bool o_ok = r1 >= 1.6 && r1 <= 2.4 && r2 >= 1.6 && r2 <= 2.4;
  os << fmt("weak order (reflected OU, Psi2, dt 0.08..0.01): differences %.3e %.3e %.3e, halving factors %.2f %.2f", d[0].mean,
            d[1].mean, d[2].mean, r1, r2);
  double p1 = 0.0, p2 = 0.0;
  weak_order_differences(ReflectionScheme::projection, &p1, &p2);
  os << fmt(" [info: projection scheme %.2f %.2f]", p1, p2);
  o.pass = w_ok && r_ok && p_ok && o_ok;
  o.detail = os.str();
  return o;
}

Outcome c9_anchors() {
  const auto c = reference_config();
  const auto h = hat_x_closed_form(c);
  const auto gr = gamma_roots(c);
  const double A = 0.5 * c.sigma_hat * c.sigma_hat, B = c.mu_hat + 0.5 * c.sigma_hat * c.sigma_hat,
               C = -(c.r - c.mu_hat);
  const double e_sum = std::abs(gr.g1 + gr.g2 + B / A), e_prod = std::abs(gr.g1 * gr.g2 - C / A);
  const bool ok = h.formula1 == 1.0 && h.formula2 == 2.0 && e_sum <= 1e-12 && e_prod <= 1e-12;
  return {ok, fmt("displayed hat_x = (%.17g, %.17g); zeta roots (%.10g, %.10g); Vieta errors %.1e %.1e", h.formula1,
                  h.formula2, h.zeta1, h.zeta2, e_sum, e_prod)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    }
  }
  const std::vector<Criterion> all = {
      {1, "smooth-fit equivalence", 5.0, c1_smooth_fit},
      {2, "differential link", 1.0, c2_link},
      {3, "HJB verification", 2.0, c3_hjb},
      {4, "MC-analytic agreement", 180.0, c4_mc},
      {5, "Nash deviation suite", 600.0, c5_nash},
      {6, "stopping-game cross-check", 300.0, c6_stopping},
      {7, "counter-jump pathwise dominance", 10.0, c7_counter_jump},
      {8, "structural invariants", 600.0, c8_structural},
      {9, "closed-form anchors", 1.0, c9_anchors},
  };
  // Shared solve outside the timed sections.
  solution();
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s C%d %s (%.2f s, limit %.0f s%s): %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.limit_s,
                in_time ? "" : ", over time", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
