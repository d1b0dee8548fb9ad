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

#include "refgame/diffusion.hpp"
#include "refgame/fundamental_pair.hpp"

namespace refgame {
namespace {

constexpr double kMu = 0.05, kSig = 0.25, kR = 0.5;

SmoothFn constant_fn(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

TEST(Generator, ConstantIsAnnihilated) {
  const auto m = gbm_model(kMu, kSig, kR);
  for (auto v : {GeneratorVariant::controlled, GeneratorVariant::stopping}) {
    const auto g = generator_apply(m, constant_fn(3.0), v);
    for (double x : {0.1, 1.0, 7.5}) EXPECT_EQ(g(x), 0.0);
  }
}

TEST(Generator, IdentityUnderGbmStopping) {
  const auto m = gbm_model(kMu, kSig, kR);
  SmoothFn id{[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
  const auto g = generator_apply(m, id, GeneratorVariant::stopping);
  for (double x : {0.2, 1.0, 3.0}) EXPECT_NEAR(g(x), (kMu + kSig * kSig) * x, 1e-15);
}

TEST(Generator, SquareUnderBrownianControlled) {
  const auto m = brownian_model(0.0, 1.0, 0.3);
  SmoothFn sq{[](double x) { return x * x; }, [](double x) { return 2 * x; }, [](double) { return 2.0; }};
  const auto g = generator_apply(m, sq, GeneratorVariant::controlled);
  for (double x : {-2.0, 0.0, 5.0}) EXPECT_DOUBLE_EQ(g(x), 1.0);
}

TEST(Generator, OutsideIntervalIsDomainError) {
  const auto m = gbm_model(kMu, kSig, kR);
  const auto g = generator_apply(m, constant_fn(1.0), GeneratorVariant::controlled);
  try {
    g(-1.0);
    FAIL() << "expected domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Generator, AgreesWithFiniteDifferences) {
  const auto m = ou_model(0.7, 0.3, 0.4, 0.2);
  SmoothFn f{[](double x) { return std::sin(x) + x * x * x; },
             [](double x) { return std::cos(x) + 3 * x * x; },
             [](double x) { return -std::sin(x) + 6 * x; }};
  for (auto v : {GeneratorVariant::controlled, GeneratorVariant::stopping}) {
    const auto g = generator_apply(m, f, v);
    for (double x : {-1.3, 0.2, 2.1}) {
      const double h = 1e-4;
      const double d1 = central_diff(f.f, x, h), d2 = central_diff2(f.f, x, h);
      const double drift = v == GeneratorVariant::controlled ? m.mu(x) : m.stopping_drift(x);
      const double fd = 0.5 * m.sigma(x) * m.sigma(x) * d2 + drift * d1;
      EXPECT_NEAR(g(x), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(ScaleDensity, ZeroDriftIsFlat) {
  const auto m = brownian_model(0.0, 1.0, 0.5);
  const auto s = scale_density(m, 0.0);
  for (double x : {-3.0, 0.0, 4.0}) EXPECT_NEAR(s(x), 1.0, 1e-15);
}

TEST(ScaleDensity, GbmClosedForm) {
  const auto m = gbm_model(kMu, kSig, kR);
  const auto s = scale_density(m, 1.0);
  const double e = -2.0 * (kMu + kSig * kSig) / (kSig * kSig);
  EXPECT_DOUBLE_EQ(s(1.0), 1.0);
  for (double x : {0.05, 0.5, 2.0, 30.0}) EXPECT_NEAR(s(x) / std::pow(x, e), 1.0, 1e-11);
}

TEST(ModelChecks, ReferenceGbmPasses) {
  const auto m = gbm_model(kMu, kSig, kR);
  EXPECT_NO_THROW(validate_model(m, geomspace(0.01, 100.0, 50)));
}

TEST(ModelChecks, BadDerivativeIsConfigError) {
  auto m = gbm_model(kMu, kSig, kR);
  m.mu_prime = [](double) { return 0.06; };
  try {
    validate_model(m, geomspace(0.1, 10.0, 20));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(ModelChecks, NonPositiveKillingRate) {
  const auto m = gbm_model(0.6, kSig, 0.5);
  const auto rep = model_checks(m, geomspace(0.1, 10.0, 20));
  EXPECT_EQ(rep.find("discount_positive")->status, Status::fail);
}

TEST(GammaRoots, QuadraticFormulaOracle) {
  // Plain textbook formula, independent of the stable variant in the library.
  const double A = 0.5 * kSig * kSig, B = kMu + 0.5 * kSig * kSig, C = -(kR - kMu);
  const double d = std::sqrt(B * B - 4 * A * C);
  const double g1 = (-B + d) / (2 * A), g2 = (-B - d) / (2 * A);
  const auto g = gbm_gamma_roots(kMu, kSig, kR);
  EXPECT_NEAR(g[0], g1, 1e-13);
  EXPECT_NEAR(g[1], g2, 1e-13);
  EXPECT_NEAR(g[0], 2.711234224026316, 1e-12);
  EXPECT_NEAR(g[1], -5.3112342240263155, 1e-12);
  EXPECT_NEAR(g[0] * g[1], -(kR - kMu) / (0.5 * kSig * kSig), 1e-12);
  EXPECT_NEAR(g[0] + g[1], 1.0 - 2.0 * (kMu + kSig * kSig) / (kSig * kSig), 1e-12);
}

TEST(FundamentalPair, GbmPowerPair) {
  const auto m = gbm_model(kMu, kSig, kR);
  const auto p = gbm_pair(kMu, kSig, kR);
  const auto g = gbm_gamma_roots(kMu, kSig, kR);
  EXPECT_DOUBLE_EQ(p.wronskian, g[0] - g[1]);
  const auto grid = geomspace(0.01, 100.0, 400);
  const auto d = diagnose_pair(m, p, grid);
  EXPECT_LT(d.max_ode_residual, 1e-8);
  EXPECT_LT(d.wronskian_rel_spread, 1e-6);
  EXPECT_TRUE(d.psi_increasing);
  EXPECT_TRUE(d.phi_decreasing);
  EXPECT_NEAR(p.wronskian_at(p.x_ref), p.wronskian, 1e-14);
  // Scale density from the pair agrees with the quadrature definition.
  const auto s = scale_density(m, 1.0);
  for (double x : {0.1, 3.0}) EXPECT_NEAR(p.scale_density(x) / s(x), 1.0, 1e-11);
}

TEST(FundamentalPair, ExponentialPairForBrownian) {
  const auto m = brownian_model(0.3, 0.8, 0.4);
  const auto p = exponential_pair(0.3, 0.8, 0.4);
  const auto d = diagnose_pair(m, p, linspace(-5, 5, 101));
  EXPECT_LT(d.max_ode_residual, 1e-8);
  EXPECT_LT(d.wronskian_rel_spread, 1e-6);
}

TEST(FundamentalPair, NumericMatchesAnalyticForGbm) {
  const auto m = gbm_model(kMu, kSig, kR);
  NumericPairOptions opt;
  opt.x_lo = 0.05;
  opt.x_hi = 20.0;
  opt.x_ref = 1.0;
  PairDiagnostics diag;
  const auto num = numeric_pair(m, opt, &diag);
  const auto ana = gbm_pair(kMu, kSig, kR);
  EXPECT_EQ(num.provenance, Provenance::numeric);
  for (double x : geomspace(0.05, 20.0, 97)) {
    EXPECT_NEAR(num.psi(x) / ana.psi(x), 1.0, 1e-7) << x;
    EXPECT_NEAR(num.phi(x) / ana.phi(x), 1.0, 1e-7) << x;
    EXPECT_NEAR(num.dpsi(x) / ana.dpsi(x), 1.0, 1e-7) << x;
    EXPECT_NEAR(num.dphi(x) / ana.dphi(x), 1.0, 1e-7) << x;
  }
  EXPECT_NEAR(num.wronskian / ana.wronskian, 1.0, 1e-7);
  const auto d = diagnose_pair(m, num, geomspace(0.06, 19.0, 200));
  EXPECT_LT(d.max_ode_residual, 1e-6);
  EXPECT_LT(d.wronskian_rel_spread, 1e-6);
}

TEST(FundamentalPair, NumericOuPairIsConsistent) {
  const auto m = ou_model(0.8, 0.0, 0.5, 0.3);
  NumericPairOptions opt;
  opt.x_lo = -2.0;
  opt.x_hi = 2.0;
  opt.x_ref = 0.0;
  const auto p = numeric_pair(m, opt);
  const auto d = diagnose_pair(m, p, linspace(-1.99, 1.99, 300));
  EXPECT_LT(d.max_ode_residual, 1e-6);
  EXPECT_LT(d.wronskian_rel_spread, 1e-6);
  EXPECT_TRUE(d.psi_increasing);
  EXPECT_TRUE(d.phi_decreasing);
  // Symmetric coefficients: phi(x) = psi(-x).
  for (double x : {-1.5, -0.3, 0.7, 1.9}) EXPECT_NEAR(p.phi(x) / p.psi(-x), 1.0, 1e-7);
  EXPECT_THROW(p.psi(2.5), Error);
}

TEST(FundamentalPair, RescalingScalesWronskian) {
  const auto p = gbm_pair(kMu, kSig, kR).rescaled(3.0, 0.25);
  EXPECT_DOUBLE_EQ(p.wronskian, 0.75 * gbm_pair(kMu, kSig, kR).wronskian);
  for (double x : {0.3, 2.0}) EXPECT_NEAR(p.wronskian_at(x) / p.wronskian, 1.0, 1e-13);
}

}  // namespace
}  // namespace refgame
