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

// refgame command line tool: solve, verify, simulate, check-assumptions and
// pollution-demo on a JSON run configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provenance.hpp"
#include "refgame/config.hpp"
#include "refgame/game.hpp"
#include "refgame/report.hpp"

namespace fs = std::filesystem;
using namespace refgame;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<std::size_t> paths;
  std::optional<std::size_t> dump_paths;
  std::string strategies = "eq,eq";
  std::vector<double> x0;
  std::string equilibrium;
};

struct Context {
  RunConfig cfg;
  json provenance;
  fs::path out;
};

Context load(const Options& o) {
  Context c;
  c.cfg = load_config(o.config);
  if (o.seed) c.cfg.mc.seed = *o.seed;
  if (o.dt) {
    if (!(*o.dt > 0.0)) fail(ErrorKind::config, "--dt: must be positive");
    c.cfg.mc.dt = *o.dt;
  }
  if (o.paths) {
    if (*o.paths < 2) fail(ErrorKind::config, "--paths: must be at least 2");
    c.cfg.mc.n_paths = *o.paths;
  }
  if (o.dump_paths) c.cfg.output.dump_paths = *o.dump_paths;
  c.out = o.out.empty() ? fs::path(c.cfg.output.dir) : fs::path(o.out);
  fs::create_directories(c.out);
  const std::string bytes = cli::read_file(o.config);
  json overrides = json::object();
  if (o.seed) overrides["seed"] = *o.seed;
  if (o.dt) overrides["dt"] = *o.dt;
  if (o.paths) overrides["paths"] = *o.paths;
  c.provenance = {{"tool_version", "0.1.0"},
                  {"schema_version", kReportSchemaVersion},
                  {"config_hash", cli::sha256_hex(c.cfg.raw.dump())},
                  {"content_id", cli::git_blob_id(bytes)},
                  {"seed", c.cfg.mc.seed},
                  {"overrides", overrides},
                  {"tolerances", tolerance_ladder()}};
  return c;
}

bool want(const RunConfig& c, const char* fmt) {
  for (const auto& f : c.output.formats)
    if (f == fmt) return true;
  return false;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  os << j.dump(2) << '\n';
  if (!os) fail(ErrorKind::config, "cannot write " + p.string());
}

template <class F>
void write_text(const fs::path& p, F&& body) {
  std::ofstream os(p);
  body(os);
  if (!os) fail(ErrorKind::config, "cannot write " + p.string());
}

int cmd_solve(const Options& o) {
  auto ctx = load(o);
  const auto game = in_stage("build_game", [&] { return make_game(ctx.cfg); });
  const auto sol = solve_game(game, solver_options(ctx.cfg, game));
  json j = {{"command", "solve"},
            {"provenance", ctx.provenance},
            {"game", game_json(game)},
            {"equilibrium", solution_json(sol)}};
  write_json(ctx.out / "equilibrium.json", j);
  if (want(ctx.cfg, "csv")) {
    const auto xs = check_grid(game, sol, ctx.cfg.output.value_points);
    write_text(ctx.out / "values.csv", [&](std::ostream& os) { write_values_csv(os, sol, xs); });
    write_text(ctx.out / "values_long.csv", [&](std::ostream& os) { write_values_long_csv(os, sol, xs); });
  }
  std::printf("a* = %.12g  b* = %.12g  kappa1 = %.12g  kappa2 = %.12g\n", sol.eq.a_star, sol.eq.b_star,
              sol.kappas.k1, sol.kappas.k2);
  return 0;
}

int cmd_verify(const Options& o) {
  auto ctx = load(o);
  const fs::path eq_path = o.equilibrium.empty() ? ctx.out / "equilibrium.json" : fs::path(o.equilibrium);
  if (!fs::exists(eq_path)) fail(ErrorKind::config, "equilibrium artifact " + eq_path.string() + " not found");
  json art;
  try {
    std::ifstream in(eq_path);
    art = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "equilibrium artifact is not valid JSON: " + std::string(e.what()));
  }
  const std::string hash = art.value("/provenance/config_hash"_json_pointer, std::string{});
  if (hash != ctx.provenance["config_hash"].get<std::string>())
    fail(ErrorKind::stale, "equilibrium artifact was produced from a different configuration (config hash " + hash +
                               ")");
  double a = 0.0, b = 0.0;
  try {
    a = art.at("equilibrium").at("a_star").get<double>();
    b = art.at("equilibrium").at("b_star").get<double>();
  } catch (const json::exception&) {
    fail(ErrorKind::config, "equilibrium artifact lacks equilibrium.a_star / b_star");
  }
  const auto game = in_stage("build_game", [&] { return make_game(ctx.cfg); });
  const auto sol = in_stage("values", [&] { return solution_at(game, a, b); });
  const auto opt = pipeline_options(ctx.cfg, game);
  const auto grid = check_grid(game, sol, opt.grid_points);

  ClauseAccumulator sf("smooth_fit", 1e-8);
  sf.add(a, sol.eq.smooth_fit[0]);
  sf.add(b, sol.eq.smooth_fit[1]);
  InequalityReport fit;
  fit.clauses.push_back(sf.finish());
  auto eo = opt.existence;
  eo.x_lo = game.x_lo;
  eo.x_hi = game.x_hi;
  const auto existence = in_stage("check_existence", [&] { return check_existence(game.pf, game.model, game.pair, eo); });
  const auto var = in_stage("verify_variational", [&] { return verify_variational(sol.sv, game.model, grid); });
  const auto hjb = in_stage("verify_hjb", [&] { return verify_hjb(sol.cv, game.model, grid, game.running, opt.hjb); });
  const auto link = link_errors(sol.cv, grid);
  const bool link_ok = link.construction <= 1e-9 && link.finite_difference <= 1e-6;
  json hj = {{"command", "verify"},
             {"provenance", ctx.provenance},
             {"a_star", a},
             {"b_star", b},
             {"smooth_fit", to_json(fit)},
             {"existence", to_json(existence)},
             {"variational", to_json(var)},
             {"hjb", to_json(hjb)},
             {"link", {{"construction", link.construction}, {"finite_difference", link.finite_difference}, {"ok", link_ok}}},
             {"not_checked", "HJB inequalities outside (x_lo, b*) for V1 and (a*, x_hi) for V2"}};
  write_json(ctx.out / "hjb_report.json", hj);
  bool ok = fit.ok() && !existence.any_fail() && var.ok() && hjb.ok() && link_ok;

  const auto starts = ctx.cfg.mc.starts.empty() ? default_starts(sol) : ctx.cfg.mc.starts;
  const auto mc_rows = in_stage("mc_agreement", [&] { return mc_agreement(game, sol, starts, opt.mc, 3.0, opt.bias_budget); });
  const double x0 = opt.nash_x0.value_or(0.5 * (a + b));
  const auto nash =
      in_stage("verify_nash", [&] { return verify_nash(game.model, game.control, a, b, x0, opt.nash); });
  StoppingMcConfig sc;
  sc.n_paths = ctx.cfg.mc.stopping_paths;
  sc.dt = ctx.cfg.mc.dt;
  sc.seed = ctx.cfg.mc.seed;
  const std::vector<double> inner = {a + 0.25 * (b - a), 0.5 * (a + b), b - 0.25 * (b - a)};
  const auto stop_rows = in_stage("stopping_agreement", [&] { return stopping_agreement(game, sol, inner, sc, 3.0, opt.bias_budget); });
  json nj = {{"command", "verify"},
             {"provenance", ctx.provenance},
             {"nash", to_json(nash)},
             {"mc_agreement", json::array()},
             {"stopping_agreement", json::array()}};
  for (const auto& r : mc_rows) {
    nj["mc_agreement"].push_back(to_json(r));
    ok = ok && r.ok;
  }
  for (const auto& r : stop_rows) {
    nj["stopping_agreement"].push_back({{"x", r.x},
                                        {"v1", r.v1},
                                        {"v2", r.v2},
                                        {"J1", to_json(r.est.J1)},
                                        {"J2", to_json(r.est.J2)},
                                        {"budget1", r.budget1},
                                        {"budget2", r.budget2},
                                        {"ok", r.ok}});
    ok = ok && r.ok;
  }
  ok = ok && nash.ok;
  if (game.pollution && game.pollution->beta2) {
    const auto cmp = in_stage("counter_jump", [&] { return counter_jump_check(game, sol, opt); });
    nj["counter_jump"] = to_json(cmp);
    ok = ok && cmp.ok;
  }
  nj["ok"] = ok;
  write_json(ctx.out / "nash_report.json", nj);
  write_text(ctx.out / "deviation_table.csv", [&](std::ostream& os) { write_deviation_csv(os, nash); });
  std::printf("verify: %s\n", ok ? "all asserted checks pass" : "check failures (see reports)");
  return ok ? 0 : exit_code(ErrorKind::check_failure);
}

Strategy parse_strategy(const std::string& spec, const std::optional<double>& eq_level) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string t; std::getline(ss, t, ':');) parts.push_back(t);
  auto num = [&](std::size_t i) {
    if (i >= parts.size()) fail(ErrorKind::config, "--strategies: '" + spec + "' is missing a number");
    try {
      return std::stod(parts[i]);
    } catch (...) {
      fail(ErrorKind::config, "--strategies: '" + parts[i] + "' is not a number");
    }
  };
  if (parts.empty()) fail(ErrorKind::config, "--strategies: empty strategy");
  const auto& k = parts[0];
  if (k == "eq") {
    if (!eq_level) fail(ErrorKind::config, "--strategies: eq needs a solved equilibrium");
    return Strategy::reflect_at(*eq_level);
  }
  if (k == "none") return Strategy::none();
  if (k == "reflect") return Strategy::reflect_at(num(1));
  if (k == "lump") return Strategy::lump_at_zero(num(1));
  if (k == "counter") return Strategy::reflect_then_counter_jump(num(1), num(2), num(3));
  fail(ErrorKind::config, "--strategies: unknown kind '" + k + "' (eq, none, reflect:L, lump:A, counter:L:E:T)");
}

int cmd_simulate(const Options& o) {
  auto ctx = load(o);
  const auto game = in_stage("build_game", [&] { return make_game(ctx.cfg); });
  const auto comma = o.strategies.find(',');
  if (comma == std::string::npos) fail(ErrorKind::config, "--strategies: expected NU,XI");
  const std::string s_nu = o.strategies.substr(0, comma), s_xi = o.strategies.substr(comma + 1);
  std::optional<Solution> sol;
  const bool needs_eq = s_nu.rfind("eq", 0) == 0 || s_xi.rfind("eq", 0) == 0;
  if (needs_eq || (o.x0.empty() && ctx.cfg.mc.starts.empty()))
    sol = solve_game(game, solver_options(ctx.cfg, game));
  const Strategy nu = parse_strategy(s_nu, sol ? std::optional<double>(sol->eq.a_star) : std::nullopt);
  const Strategy xi = parse_strategy(s_xi, sol ? std::optional<double>(sol->eq.b_star) : std::nullopt);
  std::vector<double> starts = o.x0.empty() ? ctx.cfg.mc.starts : o.x0;
  if (starts.empty()) starts = default_starts(*sol);
  const auto mc = control_mc(ctx.cfg);
  json rows = json::array();
  for (double x : starts) {
    const auto est = in_stage("simulate", [&] { return control_payoff_mc(game.model, game.control, nu, xi, x, mc); });
    json r = {{"x0", x}, {"estimate", to_json(est)}};
    if (sol) {
      r["V1"] = sol->cv.V1(x);
      r["V2"] = sol->cv.V2(x);
    }
    rows.push_back(r);
  }
  json j = {{"command", "simulate"},
            {"provenance", ctx.provenance},
            {"strategies", {{"nu", describe(nu)}, {"xi", describe(xi)}}},
            {"dt", mc.sim.dt},
            {"horizon", mc.sim.horizon},
            {"n_paths", mc.n_paths},
            {"scheme", mc.sim.scheme == ReflectionScheme::bridge ? "bridge" : "projection"},
            {"rows", rows}};
  write_json(ctx.out / "estimates.json", j);
  if (ctx.cfg.output.dump_paths > 0) {
    write_text(ctx.out / "paths.csv", [&](std::ostream& os) {
      for (std::size_t p = 0; p < ctx.cfg.output.dump_paths; ++p)
        write_path_csv(os, simulate(game.model, nu, xi, starts.front(), mc.sim, p), p, p == 0);
    });
  }
  for (const auto& r : rows)
    std::printf("x0 = %-10.6g psi1 = %.6g +- %.2g  psi2 = %.6g +- %.2g\n", r["x0"].get<double>(),
                r["estimate"]["psi1"]["mean"].get<double>(), r["estimate"]["psi1"]["se"].get<double>(),
                r["estimate"]["psi2"]["mean"].get<double>(), r["estimate"]["psi2"]["se"].get<double>());
  return 0;
}

int cmd_check(const Options& o) {
  auto ctx = load(o);
  const auto game = in_stage("build_game", [&] { return make_game(ctx.cfg); });
  const auto grid = auto_grid(game.x_lo, game.x_hi, ctx.cfg.solver.grid_points);
  const auto model = model_checks(game.model, grid);
  ExistenceOptions eo;
  eo.x_lo = game.x_lo;
  eo.x_hi = game.x_hi;
  eo.seed = ctx.cfg.mc.seed;
  const auto existence = in_stage("check_existence", [&] { return check_existence(game.pf, game.model, game.pair, eo); });
  json j = {{"command", "check-assumptions"},
            {"provenance", ctx.provenance},
            {"game", game_json(game)},
            {"model", to_json(model)},
            {"existence", to_json(existence)}};
  write_json(ctx.out / "assumptions.json", j);
  for (const auto* rep : {&model, &existence})
    for (const auto& it : rep->items) std::printf("%-40s %s\n", it.name.c_str(), to_string(it.status));
  if (model.any_fail() || existence.any_fail()) {
    std::fprintf(stderr, "refgame: assumption check failed (see assumptions.json)\n");
    return exit_code(ErrorKind::assumption);
  }
  return 0;
}

int cmd_demo(const Options& o) {
  RunConfig cfg;
  json prov;
  fs::path out;
  if (!o.config.empty()) {
    auto ctx = load(o);
    cfg = ctx.cfg;
    prov = ctx.provenance;
    out = ctx.out;
  } else {
    cfg = parse_config({{"mc", {{"seed", 20261016}}}});
    if (o.seed) cfg.mc.seed = *o.seed;
    if (o.dt) cfg.mc.dt = *o.dt;
    if (o.paths) cfg.mc.n_paths = *o.paths;
    prov = {{"tool_version", "0.1.0"},
            {"schema_version", kReportSchemaVersion},
            {"config_hash", cli::sha256_hex(cfg.raw.dump())},
            {"content_id", nullptr},
            {"seed", cfg.mc.seed},
            {"tolerances", tolerance_ladder()}};
    out = o.out.empty() ? fs::path(cfg.output.dir) : fs::path(o.out);
    fs::create_directories(out);
  }
  if (cfg.payoffs.builtin != "pollution") fail(ErrorKind::config, "pollution-demo needs payoffs.builtin pollution");
  const auto game = in_stage("build_game", [&] { return make_game(cfg); });
  const auto rep = run_pipeline(game, pipeline_options(cfg, game));
  json mc = json::array();
  for (const auto& r : rep.mc) mc.push_back(to_json(r));
  json j = {{"command", "pollution-demo"},
            {"provenance", prov},
            {"game", game_json(game)},
            {"equilibrium", solution_json(rep.solution)},
            {"existence", to_json(rep.existence)},
            {"variational", to_json(rep.variational)},
            {"hjb", to_json(rep.hjb)},
            {"link", {{"construction", rep.link.construction}, {"finite_difference", rep.link.finite_difference}}},
            {"mc_agreement", mc},
            {"ok", rep.ok}};
  if (rep.nash) j["nash"] = to_json(*rep.nash);
  if (rep.counter_jump) j["counter_jump"] = to_json(*rep.counter_jump);
  write_json(out / "pollution_report.json", j);
  const auto xs = check_grid(game, rep.solution, cfg.output.value_points);
  write_text(out / "values.csv", [&](std::ostream& os) { write_values_csv(os, rep.solution, xs); });
  if (rep.nash) write_text(out / "deviation_table.csv", [&](std::ostream& os) { write_deviation_csv(os, *rep.nash); });
  std::printf("a* = %.10g  b* = %.10g  pipeline %s\n", rep.solution.eq.a_star, rep.solution.eq.b_star,
              rep.ok ? "ok" : "has failing checks");
  return rep.ok ? 0 : exit_code(ErrorKind::check_failure);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refgame: nonzero-sum games of singular control and stopping"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "run configuration (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", o.seed, "RNG seed override");
    sub->add_option("--dt", o.dt, "time step override");
    sub->add_option("--paths", o.paths, "number of MC paths override");
  };
  auto* solve = app.add_subcommand("solve", "solve for the equilibrium thresholds and value functions");
  common(solve, true);
  auto* verify = app.add_subcommand("verify", "verify a solved equilibrium");
  common(verify, true);
  verify->add_option("--equilibrium", o.equilibrium, "equilibrium artifact (default OUT/equilibrium.json)");
  auto* sim = app.add_subcommand("simulate", "simulate controlled paths and estimate payoffs");
  common(sim, true);
  sim->add_option("--strategies", o.strategies, "NU,XI with eq | none | reflect:L | lump:A | counter:L:E:T");
  sim->add_option("--dump-paths", o.dump_paths, "write the first K paths to paths.csv");
  sim->add_option("--x0", o.x0, "starting points");
  auto* check = app.add_subcommand("check-assumptions", "evaluate model and existence conditions");
  common(check, true);
  auto* demo = app.add_subcommand("pollution-demo", "run the pollution-control pipeline end to end");
  common(demo, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::config);
  }
  try {
    if (*solve) return cmd_solve(o);
    if (*verify) return cmd_verify(o);
    if (*sim) return cmd_simulate(o);
    if (*check) return cmd_check(o);
    if (*demo) return cmd_demo(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "refgame: %s error: %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "refgame: error: %s\n", e.what());
    return 6;
  }
  return 0;
}
