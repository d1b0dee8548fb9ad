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

#include <gtest/gtest.h>

#include "refgame/game.hpp"

namespace refgame {
namespace {

const Game& reference() {
  static const Game g = pollution_game(PollutionConfig{});
  return g;
}

const Solution& reference_solution() {
  static const Solution s = solve_game(reference());
  return s;
}

TEST(Kappas, ToyByHand) {
  // k1 = (sigma^2 G1'/2 + mu G1)(a) / r with sigma = 1, mu = 0, G1' = 1.
  const auto s = solve_game(symmetric_linear_game(1.0, 0.5, 1.0));
  EXPECT_NEAR(s.kappas.k1, 1.0, 1e-14);
  EXPECT_NEAR(s.kappas.k2, 1.0, 1e-14);
}

TEST(Kappas, PollutionRunningClosedForm) {
  const auto& s = reference_solution();
  const double a = s.eq.a_star, b = s.eq.b_star, mu = 0.05, r = 0.5;
  EXPECT_NEAR(s.kappas.k1, (mu * a * 1.0 + std::sqrt(a)) / r, 1e-13);
  EXPECT_NEAR(s.kappas.k2, -(mu * b * 8.0 + b * b) / r, 1e-12);
}

TEST(ControlValues, MatchIndependentQuadrature) {
  const auto& s = reference_solution();
  const auto& v1 = s.sv.v1;
  const auto& v2 = s.sv.v2;
  const double a = s.eq.a_star, b = s.eq.b_star;
  auto piecewise = [](const RealFn& f, double lo, double hi, std::vector<double> cuts) {
    double sign = 1.0;
    if (lo > hi) std::swap(lo, hi), sign = -1.0;
    cuts.push_back(hi);
    double out = 0.0, x = lo;
    for (double c : cuts) {
      if (c <= x || c > hi) continue;
      out += integrate_adaptive(f, x, c, 1e-13);
      x = c;
    }
    return sign * out;
  };
  const RealFn f1 = [&](double x) { return v1(x); }, f2 = [&](double x) { return v2(x); };
  for (double x : {0.2, 0.5, a, 1.0, 1.5, 2.0, b, 3.0, 6.0}) {
    const double V1 = s.kappas.k1 + piecewise(f1, a, x, {a, b});
    const double V2 = s.kappas.k2 + piecewise(f2, x, b, {a, b});
    EXPECT_NEAR(s.cv.V1(x), V1, 1e-10 * std::max(1.0, std::abs(V1))) << "x = " << x;
    EXPECT_NEAR(s.cv.V2(x), V2, 1e-10 * std::max(1.0, std::abs(V2))) << "x = " << x;
  }
}

TEST(ControlValues, QuadratureAndAntiderivativesAgree) {
  const auto& g = reference();
  const auto& s = reference_solution();
  ControlValuesOptions o;
  o.x_lo = g.x_lo;
  o.x_hi = g.x_hi;
  o.use_antiderivatives = false;
  const ControlValues q(s.sv, s.kappas, o);
  EXPECT_FALSE(q.exact_quadrature());
  for (double x : linspace(0.05, 10.0, 97)) {
    EXPECT_NEAR(q.V1(x), s.cv.V1(x), 1e-10 * std::max(1.0, std::abs(s.cv.V1(x))));
    EXPECT_NEAR(q.V2(x), s.cv.V2(x), 1e-10 * std::max(1.0, std::abs(s.cv.V2(x))));
  }
}

TEST(ControlValues, RegressionAtStartingPoints) {
  const auto& s = reference_solution();
  const double a = s.eq.a_star, b = s.eq.b_star;
  EXPECT_NEAR(s.cv.V1(0.5 * a), 1.449846, 1e-6);
  EXPECT_NEAR(s.cv.V2(0.5 * a), -2.482821, 1e-6);
  EXPECT_NEAR(s.cv.V1(1.2), 2.225800, 1e-6);
  EXPECT_NEAR(s.cv.V2(1.2), -4.068704, 1e-6);
  EXPECT_NEAR(s.cv.V1(2.0 * b), 2.630692, 1e-6);
  EXPECT_NEAR(s.cv.V2(2.0 * b), -28.229193, 1e-6);
}

TEST(ControlValues, InitialJumpCostBelowA) {
  // Below a the value is the value at a less the cost of pushing to a.
  const auto& s = reference_solution();
  const double a = s.eq.a_star;
  for (double x : {0.1, 0.4, 0.7}) EXPECT_NEAR(s.cv.V1(x), s.kappas.k1 - 1.0 * (a - x), 1e-12);
}

TEST(ControlValues, InitialJumpCostAboveB) {
  const auto& s = reference_solution();
  const double b = s.eq.b_star;
  for (double x : {2.5, 4.0, 9.0}) EXPECT_NEAR(s.cv.V2(x), s.kappas.k2 - 8.0 * (x - b), 1e-10 * x);
}

TEST(Link, ByConstructionAndFiniteDifferences) {
  for (auto v : {Variant::running, Variant::plain}) {
    const auto g = pollution_game(PollutionConfig{}, v);
    const auto s = solve_game(g);
    const auto e = link_errors(s.cv, check_grid(g, s, 2000));
    EXPECT_LE(e.construction, 1e-9) << to_string(v);
    EXPECT_LE(e.finite_difference, 1e-6) << to_string(v);
  }
}

TEST(Hjb, HoldsForBothVariantsAndToy) {
  std::vector<Game> games = {pollution_game(PollutionConfig{}, Variant::running),
                             pollution_game(PollutionConfig{}, Variant::plain), symmetric_linear_game()};
  for (const auto& g : games) {
    const auto s = solve_game(g);
    const auto rep = verify_hjb(s.cv, g.model, check_grid(g, s, 2000), g.running);
    for (const auto& c : rep.clauses)
      EXPECT_TRUE(c.ok) << g.name << "/" << to_string(g.variant) << " " << c.clause << " worst " << c.worst << " at "
                        << c.at;
  }
}

TEST(Hjb, DetectsWrongThresholds) {
  const auto& g = reference();
  const auto& s = reference_solution();
  const auto bad = solution_at(g, s.eq.a_star + 0.05, s.eq.b_star);
  const auto rep = verify_hjb(bad.cv, g.model, check_grid(g, bad, 2000), g.running);
  EXPECT_FALSE(rep.ok());
}

TEST(Hjb, RunningTermMatters) {
  const auto& g = reference();
  const auto& s = reference_solution();
  const auto rep = verify_hjb(s.cv, g.model, check_grid(g, s, 500), RunningProfits{});
  EXPECT_FALSE(rep.ok());
}

}  // namespace
}  // namespace refgame
