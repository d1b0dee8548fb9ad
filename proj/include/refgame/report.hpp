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

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "refgame/config.hpp"
#include "refgame/game.hpp"

namespace refgame {

inline constexpr int kReportSchemaVersion = 1;

/// Shortest round-trip text of a double; non-finite values as "nan"/"inf".
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

inline json to_json(const CheckItem& i) {
  json ev = json::object();
  for (const auto& [k, v] : i.evidence) ev[k] = v;
  return {{"name", i.name}, {"status", to_string(i.status)}, {"detail", i.detail}, {"evidence", ev}};
}

inline json to_json(const ConditionReport& r) {
  json items = json::array();
  for (const auto& i : r.items) items.push_back(to_json(i));
  return {{"any_fail", r.any_fail()}, {"items", items}};
}

inline json to_json(const ClauseResult& c) {
  return {{"clause", c.clause}, {"worst", c.worst}, {"at", c.at}, {"tol", c.tol}, {"points", c.points}, {"ok", c.ok}};
}

inline json to_json(const InequalityReport& r) {
  json cl = json::array();
  for (const auto& c : r.clauses) cl.push_back(to_json(c));
  return {{"ok", r.ok()}, {"clauses", cl}};
}

inline json to_json(const PathAudit& a) {
  return {{"simultaneous_jumps", a.simultaneous_jumps}, {"band_excess", a.band_excess},
          {"flat_off_nu", a.flat_off_nu},               {"flat_off_xi", a.flat_off_xi},
          {"nu_total", a.nu_total},                     {"xi_total", a.xi_total}};
}

inline json to_json(const ControlEstimate& e) {
  return {{"psi1", to_json(e.psi1)},
          {"psi2", to_json(e.psi2)},
          {"n_paths", e.n_paths},
          {"exited", e.exited},
          {"exit_fraction", e.exit_fraction},
          {"leaked_mass", e.leaked_mass},
          {"tail_discount", e.tail_discount},
          {"reliable", e.reliable},
          {"tol_ref", e.tol_ref},
          {"audit", to_json(e.audit)}};
}

inline json to_json(const McRow& r) {
  return {{"x0", r.x0},           {"V1", r.V1},           {"V2", r.V2}, {"estimate", to_json(r.est)},
          {"budget1", r.budget1}, {"budget2", r.budget2}, {"ok", r.ok}};
}

inline json to_json(const DeviationRow& r) {
  return {{"player", r.player == Player::one ? 1 : 2},
          {"kind", r.label},
          {"strategy", r.strategy},
          {"shift", r.shift},
          {"payoff", to_json(r.payoff)},
          {"diff", to_json(r.diff)},
          {"bound", r.bound},
          {"ok", r.ok},
          {"exit_fraction", r.exit_fraction},
          {"leaked_mass", r.leaked_mass},
          {"reliable", r.reliable},
          {"simultaneous_jumps", r.simultaneous_jumps}};
}

inline json to_json(const NashReport& n) {
  json rows = json::array();
  for (const auto& r : n.rows) rows.push_back(to_json(r));
  return {{"x0", n.x0},
          {"a", n.a},
          {"b", n.b},
          {"equilibrium", to_json(n.equilibrium)},
          {"deviations", rows},
          {"skipped", n.skipped},
          {"spearman_player1", n.spearman1},
          {"spearman_player2", n.spearman2},
          {"ok", n.ok},
          {"note", "deviations form a finite parametric menu; passing is evidence, not proof"}};
}

inline json to_json(const PathwiseComparison& p) {
  json rows = json::array();
  for (const auto& r : p.rows)
    rows.push_back({{"path", r.path},
                    {"triggered", r.triggered},
                    {"t0", r.t0},
                    {"payoff_xi", r.payoff_xi},
                    {"payoff_xi0", r.payoff_xi0},
                    {"gap", r.gap},
                    {"expected", r.expected},
                    {"error", r.error}});
  return {{"triggered", p.triggered}, {"max_error", p.max_error}, {"tol", p.tol},
          {"ok", p.ok},               {"notice", p.notice},       {"rows", rows}};
}

inline json to_json(const ThresholdEquilibrium& eq) {
  json roots = json::array();
  for (const auto& r : eq.roots) roots.push_back({r.a, r.b});
  return {{"a_star", eq.a_star},
          {"b_star", eq.b_star},
          {"v1_coeffs", {eq.v1_coeffs.A, eq.v1_coeffs.B}},
          {"v2_coeffs", {eq.v2_coeffs.A, eq.v2_coeffs.B}},
          {"residuals", eq.residuals},
          {"smooth_fit", eq.smooth_fit},
          {"roots", roots},
          {"multiple_roots", eq.multiple_roots},
          {"hat_x1", eq.hat_x1},
          {"hat_x2", eq.hat_x2},
          {"iterations", eq.iterations}};
}

inline json game_json(const Game& g) {
  json j = {{"name", g.name},
            {"variant", to_string(g.variant)},
            {"family", g.model.family},
            {"r", g.model.r},
            {"x_lo", g.x_lo},
            {"x_hi", g.x_hi},
            {"pair_provenance", to_string(g.pair.provenance)},
            {"lower_boundary", to_string(g.model.lower)},
            {"upper_boundary", to_string(g.model.upper)},
            {"unchecked",
             "the measure change behind the stopping process drift mu + sigma sigma' is assumed, not verified"}};
  if (g.gamma) j["gamma"] = {g.gamma->g1, g.gamma->g2};
  if (g.hat_x)
    j["hat_x"] = {{"displayed_formula", {g.hat_x->formula1, g.hat_x->formula2}},
                  {"zeta_roots", {g.hat_x->zeta1, g.hat_x->zeta2}},
                  {"used", "zeta_roots"}};
  if (g.pollution_payoffs) j["particular"] = {{"c_pi", g.pollution_payoffs->c_pi}, {"c_u", g.pollution_payoffs->c_u}};
  return j;
}

inline json solution_json(const Solution& s) {
  json j = to_json(s.eq);
  j["kappa1"] = s.kappas.k1;
  j["kappa2"] = s.kappas.k2;
  if (s.route_gap) j["route_gap"] = *s.route_gap;
  return j;
}

inline json tolerance_ladder() {
  return {{"construction", 1e-9},
          {"residual_scaled", 1e-7},
          {"inequality", 1e-9},
          {"finite_difference_link", 1e-6},
          {"mc_z", 3.0},
          {"mc_relative", 5e-3}};
}

// CSV writers.

inline void write_values_csv(std::ostream& os, const Solution& s, const std::vector<double>& xs) {
  os << "x,V1,V2,V1_prime,V2_prime,v1,v2,region\n";
  for (double x : xs) {
    os << fmt_double(x) << ',' << fmt_double(s.cv.V1(x)) << ',' << fmt_double(s.cv.V2(x)) << ','
       << fmt_double(s.cv.V1_prime(x)) << ',' << fmt_double(s.cv.V2_prime(x)) << ',' << fmt_double(s.sv.v1(x)) << ','
       << fmt_double(s.sv.v2(x)) << ',' << to_string(s.sv.v1.region(x)) << '\n';
  }
}

/// Long format (variable, x, value) for plotting tools.
inline void write_values_long_csv(std::ostream& os, const Solution& s, const std::vector<double>& xs) {
  os << "variable,x,value\n";
  auto col = [&](const char* name, auto f) {
    for (double x : xs) os << name << ',' << fmt_double(x) << ',' << fmt_double(f(x)) << '\n';
  };
  col("V1", [&](double x) { return s.cv.V1(x); });
  col("V2", [&](double x) { return s.cv.V2(x); });
  col("V1_prime", [&](double x) { return s.cv.V1_prime(x); });
  col("V2_prime", [&](double x) { return s.cv.V2_prime(x); });
  col("v1", [&](double x) { return s.sv.v1(x); });
  col("v2", [&](double x) { return s.sv.v2(x); });
}

inline void write_deviation_csv(std::ostream& os, const NashReport& n) {
  os << "player,kind,strategy,shift,payoff,payoff_se,diff,diff_se,bound,ok,exit_fraction,reliable\n";
  auto row = [&](int p, const std::string& kind, const std::string& strat, double shift, const Estimate& pay,
                 const Estimate& d, double bound, bool ok, double exitf, bool rel) {
    os << p << ',' << kind << ",\"" << strat << "\"," << fmt_double(shift) << ',' << fmt_double(pay.mean) << ','
       << fmt_double(pay.se) << ',' << fmt_double(d.mean) << ',' << fmt_double(d.se) << ',' << fmt_double(bound) << ','
       << (ok ? 1 : 0) << ',' << fmt_double(exitf) << ',' << (rel ? 1 : 0) << '\n';
  };
  row(1, "equilibrium", "reflect(a)", 0.0, n.eq1, {}, 0.0, true, n.equilibrium.exit_fraction, n.equilibrium.reliable);
  row(2, "equilibrium", "reflect(b)", 0.0, n.eq2, {}, 0.0, true, n.equilibrium.exit_fraction, n.equilibrium.reliable);
  for (const auto& r : n.rows)
    row(r.player == Player::one ? 1 : 2, r.label, r.strategy, r.shift, r.payoff, r.diff, r.bound, r.ok,
        r.exit_fraction, r.reliable);
}

inline void write_path_csv(std::ostream& os, const ControlPath& p, std::size_t path_index, bool header) {
  if (header) os << "path,t,x,dnu_c,dnu_j,dxi_c,dxi_j\n";
  for (std::size_t n = 0; n < p.t.size(); ++n)
    os << path_index << ',' << fmt_double(p.t[n]) << ',' << fmt_double(p.x[n]) << ',' << fmt_double(p.dnu_c[n]) << ','
       << fmt_double(p.dnu_j[n]) << ',' << fmt_double(p.dxi_c[n]) << ',' << fmt_double(p.dxi_j[n]) << '\n';
}

}  // namespace refgame
