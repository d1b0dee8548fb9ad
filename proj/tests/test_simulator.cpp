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

#include <cmath>
#include <cstdlib>
#include <numeric>

#include <gtest/gtest.h>

#include "refgame/game.hpp"

namespace refgame {
namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(Simulate, DeterministicDriftReflectsAtB) {
  // x' = 1 from 1, reflected at 2: xi(t) = (t - 1)^+.
  const auto m = brownian_model(1.0, 0.0, 0.5);
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 3.0;
  const auto p = simulate(m, Strategy::none(), Strategy::reflect_at(2.0), 1.0, cfg);
  EXPECT_NEAR(sum(p.dxi_c), 2.0, 1e-12);
  EXPECT_EQ(sum(p.dnu_c), 0.0);
  EXPECT_DOUBLE_EQ(p.x.back(), 2.0);
  EXPECT_EQ(p.t.size(), cfg.steps() + 1);
  EXPECT_FALSE(p.exited);
}

TEST(Simulate, InitialJumpBelowA) {
  const auto m = ou_model(1.0, 0.0, 0.7, 0.3);
  SimConfig cfg;
  cfg.horizon = 0.5;
  const auto p = simulate(m, Strategy::reflect_at(-0.5), Strategy::reflect_at(0.5), -2.25, cfg);
  EXPECT_EQ(p.dnu_j[0], -0.5 - -2.25);
  EXPECT_EQ(p.dxi_j[0], 0.0);
  ASSERT_EQ(p.jumps.size(), 1u);
  EXPECT_EQ(p.jumps[0].t, 0.0);
  EXPECT_EQ(p.x[0], -2.25);  // left limit at 0+
}

TEST(Simulate, InitialJumpAboveB) {
  const auto m = gbm_model(0.05, 0.25, 0.5);
  SimConfig cfg;
  cfg.horizon = 0.5;
  const auto p = simulate(m, Strategy::reflect_at(0.77), Strategy::reflect_at(2.15), 4.0, cfg);
  EXPECT_EQ(p.dxi_j[0], 4.0 - 2.15);
  EXPECT_EQ(p.dnu_j[0], 0.0);
}

TEST(Simulate, BandAndFlatOff) {
  const auto m = gbm_model(0.05, 0.25, 0.5);
  const double a = 0.7738651239, b = 2.1536876613;
  for (auto scheme : {ReflectionScheme::bridge, ReflectionScheme::projection}) {
    SimConfig cfg;
    cfg.dt = 2e-3;
    cfg.horizon = 4.0;
    cfg.scheme = scheme;
    for (std::uint64_t path = 0; path < 40; ++path) {
      const auto p = simulate(m, Strategy::reflect_at(a), Strategy::reflect_at(b), 1.2, cfg, path);
      for (std::size_t n = 0; n < p.x.size(); ++n) {
        ASSERT_GE(p.x[n], a);
        ASSERT_LE(p.x[n], b);
        if (scheme == ReflectionScheme::projection) {
          if (p.dnu_c[n] > 0.0) ASSERT_EQ(p.x[n], a);
          if (p.dxi_c[n] > 0.0) ASSERT_EQ(p.x[n], b);
        }
        ASSERT_FALSE(p.dnu_c[n] > 0.0 && p.dxi_c[n] > 0.0);
      }
    }
  }
}

TEST(Simulate, AuditOfEquilibriumPaths) {
  const auto g = pollution_game(PollutionConfig{});
  const auto s = solve_game(g);
  ControlMcConfig mc;
  mc.n_paths = 200;
  mc.sim.dt = 2e-3;
  mc.sim.horizon = 4.0;
  const auto [nu, xi] = equilibrium_strategies(s.eq.a_star, s.eq.b_star);
  for (double x0 : {0.3, 1.2, 5.0}) {
    const auto e = control_payoff_mc(g.model, g.control, nu, xi, x0, mc);
    EXPECT_EQ(e.audit.simultaneous_jumps, 0u);
    EXPECT_LE(e.audit.band_excess, 0.0);
    EXPECT_EQ(e.audit.flat_off_nu, 0.0);
    EXPECT_EQ(e.audit.flat_off_xi, 0.0);
    EXPECT_EQ(e.exited, 0u);
  }
}

TEST(Simulate, SimultaneousJumpIsCounted) {
  const auto m = brownian_model(0.0, 1.0, 0.5);
  ControlMcConfig mc;
  mc.n_paths = 4;
  mc.sim.horizon = 0.1;
  const auto pay = zhu_payoffs(symmetric_linear_game().pf);
  const auto e = control_payoff_mc(m, pay, Strategy::lump_at_zero(3.0), Strategy::reflect_at(1.0), 0.0, mc);
  EXPECT_EQ(e.audit.simultaneous_jumps, 4u);
}

TEST(Simulate, ConfigAndDomainErrors) {
  const auto m = gbm_model(0.05, 0.25, 0.5);
  SimConfig cfg;
  auto kind = [&](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::construction;
  };
  EXPECT_EQ(kind([&] { simulate(m, Strategy::none(), Strategy::none(), -1.0, cfg); }), ErrorKind::domain);
  EXPECT_EQ(kind([&] { simulate(m, Strategy::reflect_at(2.0), Strategy::reflect_at(1.0), 1.5, cfg); }),
            ErrorKind::config);
  cfg.refine = 0;
  EXPECT_EQ(kind([&] { simulate(m, Strategy::none(), Strategy::none(), 1.0, cfg); }), ErrorKind::config);
  cfg.refine = 1;
  EXPECT_EQ(kind([&] {
              simulate(m, Strategy::none(), Strategy::reflect_then_counter_jump(2.0, 0.1, 1.0), 1.0, cfg);
            }),
            ErrorKind::config);
}

TEST(Picard, ConvergesToProjectionScheme) {
  const auto m = ou_model(2.0, 0.0, 1.0, 0.5);
  const double a = -0.3, x0 = 0.1;
  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.horizon = 2.0;
  cfg.scheme = ReflectionScheme::projection;
  cfg.seed = 77;
  for (std::uint64_t path = 0; path < 5; ++path) {
    const auto p = simulate(m, Strategy::reflect_at(a), Strategy::none(), x0, cfg, path);
    NormalStream ns(cfg.seed, path);
    std::vector<double> z(cfg.steps()), xi(cfg.steps() + 1, 0.0);
    for (std::size_t n = 0; n < z.size(); ++n) z[n] = ns.normal(n);
    const auto pic = picard_reflection(m, a, x0, cfg.dt, z, xi);
    ASSERT_TRUE(pic.converged);
    double nu = 0.0;
    for (std::size_t n = 1; n < p.x.size(); ++n) {
      nu += p.dnu_c[n];
      EXPECT_NEAR(pic.x[n], p.x[n], 1e-12);
      EXPECT_NEAR(pic.nu[n], nu, 1e-12);
    }
  }
}

TEST(ZhuIntegral, LinearMarginalExact) {
  const RealFn g = [](double x) { return 3.0 + 2.0 * x; };
  // int_0^s g(x0 + z) dz = 3 s + 2 (x0 s + s^2 / 2)
  EXPECT_NEAR(jump_integral(g, 1.0, 0.5, Role::increaser), 1.5 + 2.0 * (0.5 + 0.125), 1e-14);
  // decreaser integrates g(x0 - z)
  EXPECT_NEAR(jump_integral(g, 1.0, 0.5, Role::decreaser), 1.5 + 2.0 * (0.5 - 0.125), 1e-14);
}

TEST(ZhuIntegral, ChatteringConvergesAtFirstOrder) {
  const RealFn g = [](double x) { return std::exp(-x) + x * x; };
  const double exact = jump_integral(g, 0.3, 1.7, Role::increaser);
  double prev = std::abs(chattering_cost(g, 0.3, 1.7, Role::increaser, 8) - exact);
  for (int k = 16; k <= 512; k *= 2) {
    const double err = std::abs(chattering_cost(g, 0.3, 1.7, Role::increaser, k) - exact);
    EXPECT_NEAR(prev / err, 2.0, 0.15) << "k = " << k;
    prev = err;
  }
}

TEST(ZhuIntegral, RecordedPathMatchesAccumulator) {
  const auto g = symmetric_linear_game();
  const auto s = solve_game(g);
  ControlMcConfig mc;
  mc.n_paths = 1;
  mc.sim.dt = 1e-2;
  mc.sim.horizon = 5.0;
  const auto [nu, xi] = equilibrium_strategies(s.eq.a_star, s.eq.b_star);
  for (double x0 : {-3.0, 0.5, 4.0}) {
    const auto p = simulate(g.model, nu, xi, x0, mc.sim, 0);
    const double psi1 =
        zhu_integral(p, g.pf.L1, Role::decreaser, g.model.r) - zhu_integral(p, g.pf.G1, Role::increaser, g.model.r);
    const double psi2 =
        zhu_integral(p, g.pf.L2, Role::increaser, g.model.r) - zhu_integral(p, g.pf.G2, Role::decreaser, g.model.r);
    const auto e = control_payoff_mc(g.model, g.control, nu, xi, x0, mc);
    EXPECT_NEAR(e.psi1.mean, psi1, 1e-12);
    EXPECT_NEAR(e.psi2.mean, psi2, 1e-12);
  }
}

TEST(ZhuIntegral, InitialJumpCostMatchesValueDifference) {
  // Pushing from x0 < a to a costs int_{x0}^{a} G1, which is V1(a) - V1(x0).
  const auto g = symmetric_linear_game();
  const auto s = solve_game(g);
  const double a = s.eq.a_star, x0 = a - 1.3;
  SimConfig cfg;
  cfg.horizon = 1e-3;
  const auto p = simulate(g.model, Strategy::reflect_at(a), Strategy::reflect_at(s.eq.b_star), x0, cfg);
  ASSERT_FALSE(p.jumps.empty());
  const double cost = jump_integral(g.pf.G1, p.jumps[0].from, p.jumps[0].size, Role::increaser);
  EXPECT_NEAR(cost, s.cv.V1(a) - s.cv.V1(x0), 1e-10);
}

TEST(Payoff, InactionEarnsNothingWithoutRunningProfit) {
  const auto g = symmetric_linear_game();
  ControlMcConfig mc;
  mc.n_paths = 50;
  mc.sim.horizon = 1.0;
  const auto e = control_payoff_mc(g.model, g.control, Strategy::none(), Strategy::none(), 0.4, mc);
  EXPECT_EQ(e.psi1.mean, 0.0);
  EXPECT_EQ(e.psi2.mean, 0.0);
}

TEST(Payoff, BitIdenticalAcrossWorkerCounts) {
  const auto g = pollution_game(PollutionConfig{});
  const auto s = solve_game(g);
  ControlMcConfig mc;
  mc.n_paths = 257;
  mc.sim.dt = 5e-3;
  mc.sim.horizon = 2.0;
  mc.sim.seed = 99;
  const auto [nu, xi] = equilibrium_strategies(s.eq.a_star, s.eq.b_star);
  ::setenv("REFGAME_THREADS", "1", 1);
  const auto e1 = control_payoff_mc(g.model, g.control, nu, xi, 1.2, mc);
  ::setenv("REFGAME_THREADS", "5", 1);
  const auto e5 = control_payoff_mc(g.model, g.control, nu, xi, 1.2, mc);
  ::unsetenv("REFGAME_THREADS");
  EXPECT_EQ(e1.psi1.mean, e5.psi1.mean);
  EXPECT_EQ(e1.psi2.mean, e5.psi2.mean);
  EXPECT_EQ(e1.psi1.se, e5.psi1.se);
  mc.sim.seed = 100;
  const auto other = control_payoff_mc(g.model, g.control, nu, xi, 1.2, mc);
  EXPECT_NE(other.psi1.mean, e1.psi1.mean);
}

TEST(Payoff, RefinedRunsShareNoise) {
  // With refine k a step of size dt uses the normals of k fine steps; the
  // endpoint of an unreflected Brownian path is then the same.
  const auto m = brownian_model(0.3, 1.0, 0.5);
  SimConfig coarse, fine;
  coarse.dt = 0.04;
  coarse.refine = 4;
  coarse.horizon = fine.horizon = 2.0;
  fine.dt = 0.01;
  const auto pc = simulate(m, Strategy::none(), Strategy::none(), 0.0, coarse, 3);
  const auto pf = simulate(m, Strategy::none(), Strategy::none(), 0.0, fine, 3);
  EXPECT_NEAR(pc.x.back(), pf.x.back(), 1e-12);
}

TEST(CounterJump, GapMatchesClosedForm) {
  const auto m = gbm_model(0.05, 0.25, 0.5);
  CounterJumpSpec spec;
  spec.alpha2 = 1.0;
  spec.beta2 = 2.0;
  spec.a = 0.7738651239;
  spec.b = 2.1536876613;
  spec.excess = 0.5;
  spec.t0 = 1.0;
  spec.profit2 = [](double x) { return -x * x; };
  SimConfig sim;
  sim.dt = 1e-3;
  sim.horizon = 2.0;
  const auto c = counter_jump_dominance(m, spec, 1.4, 20, sim);
  EXPECT_TRUE(c.ok);
  EXPECT_EQ(c.triggered, 20u);
  EXPECT_LE(c.max_error, 1e-10);
  EXPECT_NEAR(c.rows[0].expected, std::exp(-0.5) * 0.5, 1e-15);
  for (const auto& r : c.rows) EXPECT_GE(r.gap, 0.0);
}

TEST(CounterJump, DegenerateCases) {
  const auto m = ou_model(1.0, 1.5, 0.4, 0.5);
  CounterJumpSpec spec;
  spec.a = 1.0;
  spec.b = 2.0;
  spec.t0 = 0.5;
  SimConfig sim;
  sim.dt = 1e-2;
  sim.horizon = 1.0;
  spec.excess = 0.0;
  auto c = counter_jump_dominance(m, spec, 1.5, 10, sim);
  EXPECT_EQ(c.max_error, 0.0);
  for (const auto& r : c.rows) EXPECT_EQ(r.gap, 0.0);
  spec.excess = 0.3;
  spec.beta2 = spec.alpha2 = 1.5;
  c = counter_jump_dominance(m, spec, 1.5, 10, sim);
  for (const auto& r : c.rows) EXPECT_NEAR(r.gap, 0.0, 1e-12);
  spec.alpha2 = 3.0;
  EXPECT_THROW(counter_jump_dominance(m, spec, 1.5, 10, sim), Error);
}

TEST(Nash, ToyEquilibriumSurvivesDeviations) {
  const auto g = symmetric_linear_game();
  const auto s = solve_game(g);
  NashOptions o;
  o.mc.n_paths = 400;
  o.mc.sim.dt = 5e-3;
  o.mc.sim.horizon = 10.0;
  o.mc.sim.x_lo = -12.0;
  o.mc.sim.x_hi = 12.0;
  o.shifts = {-0.2, 0.2};
  const auto rep = verify_nash(g.model, g.control, s.eq.a_star, s.eq.b_star, 0.3, o);
  EXPECT_TRUE(rep.ok);
  EXPECT_EQ(rep.rows.size(), 8u);
  for (const auto& r : rep.rows) EXPECT_TRUE(r.ok) << r.label << " " << r.strategy << " diff " << r.diff.mean;
}

TEST(Nash, DeviationMenuSkipsForcedSimultaneousJumps) {
  const auto m = brownian_model(0.0, 1.0, 0.5);
  NashOptions o;
  std::vector<std::string> skipped;
  const auto menu = deviation_menu(m, -1.0, 1.0, 1.5, o, &skipped);
  for (const auto& d : menu) EXPECT_FALSE(d.player == Player::one && d.label == "lump");
  EXPECT_FALSE(skipped.empty());
}

}  // namespace
}  // namespace refgame
