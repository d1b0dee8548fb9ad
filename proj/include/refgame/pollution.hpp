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

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "refgame/control_game.hpp"
#include "refgame/diffusion.hpp"
#include "refgame/fundamental_pair.hpp"
#include "refgame/stopping_game.hpp"

namespace refgame {

/// Pollution-control game on a geometric Brownian motion: player 1 earns
/// profit (c x)^lambda and invests at unit cost alpha1, player 2 suffers
/// -(c x)^delta and abates at unit cost alpha2. c is a unit of the state.
struct PollutionConfig {
  double mu_hat = 0.05;
  double sigma_hat = 0.25;
  double r = 0.5;
  double lambda = 0.5;
  double delta = 2.0;
  double alpha1 = 1.0;
  double alpha2 = 8.0;
  std::optional<double> beta1, beta2;
  double state_scale = 1.0;
};

struct GammaRoots {
  double g1 = 0.0;  // positive
  double g2 = 0.0;  // negative
};

/// Q(g) = sigma^2 g (g - 1) / 2 + (mu + sigma^2) g - (r - mu).
inline double characteristic(const PollutionConfig& c, double g) {
  const double s2 = c.sigma_hat * c.sigma_hat;
  return 0.5 * s2 * g * (g - 1.0) + (c.mu_hat + s2) * g - (c.r - c.mu_hat);
}

inline GammaRoots gamma_roots(const PollutionConfig& c) {
  if (!(c.r > c.mu_hat)) fail(ErrorKind::config, "pollution: r must exceed mu_hat");
  if (!(c.sigma_hat > 0.0)) fail(ErrorKind::config, "pollution: sigma_hat must be positive");
  const auto g = gbm_gamma_roots(c.mu_hat, c.sigma_hat, c.r);
  return {g[0], g[1]};
}

/// Admissibility of a configuration: r > mu_hat, the exponent window
/// max(0, g2 + 1) < lambda < 1 < delta < 1 + g1, positive costs, costs
/// below rewards when given, and no resonance of the power particular
/// solutions.
inline void validate(const PollutionConfig& c) {
  const auto g = gamma_roots(c);
  std::ostringstream os;
  if (!(c.lambda > std::max(0.0, g.g2 + 1.0) && c.lambda < 1.0))
    os << "pollution: lambda = " << c.lambda << " outside (max(0, gamma2 + 1), 1) = (" << std::max(0.0, g.g2 + 1.0)
       << ", 1)";
  else if (!(c.delta > 1.0 && c.delta < 1.0 + g.g1))
    os << "pollution: delta = " << c.delta << " outside (1, 1 + gamma1) = (1, " << 1.0 + g.g1 << ")";
  else if (!(c.alpha1 > 0.0 && c.alpha2 > 0.0))
    os << "pollution: alpha1 and alpha2 must be positive";
  else if ((c.beta1 && !(*c.beta1 >= c.alpha1)) || (c.beta2 && !(*c.beta2 >= c.alpha2)))
    os << "pollution: beta_i must not be below alpha_i";
  else if (!(c.state_scale > 0.0))
    os << "pollution: state_scale must be positive";
  else if (std::abs(characteristic(c, c.lambda - 1.0)) < 1e-12)
    os << "pollution: exponent lambda - 1 = " << c.lambda - 1.0 << " is a characteristic root (resonance)";
  else if (std::abs(characteristic(c, c.delta - 1.0)) < 1e-12)
    os << "pollution: exponent delta - 1 = " << c.delta - 1.0 << " is a characteristic root (resonance)";
  const std::string msg = os.str();
  if (!msg.empty()) fail(ErrorKind::config, msg);
}

/// k x^e, with cheaper closures for the common exponents.
inline RealFn power_fn(double k, double e) {
  if (e == 0.0) return [k](double) { return k; };
  if (e == 1.0) return [k](double x) { return k * x; };
  if (e == 2.0) return [k](double x) { return k * x * x; };
  if (e == -1.0) return [k](double x) { return k / x; };
  if (e == 0.5) return [k](double x) { return k * std::sqrt(x); };
  if (e == -0.5) return [k](double x) { return k / std::sqrt(x); };
  if (e == -1.5) return [k](double x) { return k / (x * std::sqrt(x)); };
  if (e == -2.5) return [k](double x) { return k / (x * x * std::sqrt(x)); };
  return [k, e](double x) { return k * std::pow(x, e); };
}

inline DiffusionModel pollution_model(const PollutionConfig& c) { return gbm_model(c.mu_hat, c.sigma_hat, c.r); }

inline FundamentalPair pollution_pair(const PollutionConfig& c) {
  gamma_roots(c);
  return gbm_pair(c.mu_hat, c.sigma_hat, c.r);
}

struct PollutionPayoffs {
  double c_pi = 0.0;  // Pi'(x) = k_pi c_pi x^{lambda - 1}
  double c_u = 0.0;   // U'(x) = k_u c_u x^{delta - 1}
  double k_pi = 1.0;  // profit scale (c^lambda)
  double k_u = 1.0;   // utility scale (c^delta)
  PayoffFunctions generic;
  RunningProfits running;
  RealFn Pi_prime, U_prime, Pi, U;
  RealFn dpi, du;
  StoppingData running1, running2;
};

/// Power particular solutions Pi', U' of (L_X - (r - mu)) y = -pi', u' and
/// the identification G1 = alpha1 - Pi', L1 = -Pi', G2 = alpha2 - U', L2 = -U'.
inline PollutionPayoffs build_payoffs(const PollutionConfig& c) {
  validate(c);
  PollutionPayoffs out;
  const double lam = c.lambda, del = c.delta;
  const double a1 = c.alpha1, a2 = c.alpha2;
  out.k_pi = std::pow(c.state_scale, lam);
  out.k_u = std::pow(c.state_scale, del);
  out.c_pi = -lam / characteristic(c, lam - 1.0);
  out.c_u = -del / characteristic(c, del - 1.0);
  const double cp = out.k_pi * out.c_pi, cu = out.k_u * out.c_u;
  const double kp = out.k_pi, ku = out.k_u;

  auto power = [](double k, double e) { return power_fn(k, e); };
  // Pi' and its derivatives.
  const RealFn P1 = power(cp, lam - 1.0), P2 = power(cp * (lam - 1.0), lam - 2.0),
               P3 = power(cp * (lam - 1.0) * (lam - 2.0), lam - 3.0);
  const RealFn U1 = power(cu, del - 1.0), U2 = power(cu * (del - 1.0), del - 2.0),
               U3 = power(cu * (del - 1.0) * (del - 2.0), del - 3.0);
  out.Pi_prime = P1;
  out.U_prime = U1;
  out.Pi = power(cp / lam, lam);
  out.U = power(cu / del, del);
  out.dpi = power(kp * lam, lam - 1.0);
  out.du = power(-ku * del, del - 1.0);
  out.running.profit1 = power(kp, lam);
  out.running.profit2 = power(-ku, del);

  auto& g = out.generic;
  g.G1 = [a1, P1](double x) { return a1 - P1(x); };
  g.dG1 = [P2](double x) { return -P2(x); };
  g.d2G1 = [P3](double x) { return -P3(x); };
  g.L1 = [P1](double x) { return -P1(x); };
  g.dL1 = [P2](double x) { return -P2(x); };
  g.G2 = [a2, U1](double x) { return a2 - U1(x); };
  g.dG2 = [U2](double x) { return -U2(x); };
  g.d2G2 = [U3](double x) { return -U3(x); };
  g.L2 = [U1](double x) { return -U1(x); };
  g.dL2 = [U2](double x) { return -U2(x); };

  // Running-profit form: constant marginal costs, particular solution Pi'
  // (resp. U') on the continuation region, forcing -pi' (resp. u').
  const RealFn zero = [](double) { return 0.0; };
  auto constant = [](double v) { return RealFn([v](double) { return v; }); };
  auto linear = [](double v) { return RealFn([v](double x) { return v * x; }); };
  auto& r1 = out.running1;
  r1.own = constant(a1), r1.d_own = zero, r1.d2_own = zero, r1.own_int = linear(a1);
  r1.opp = zero, r1.d_opp = zero, r1.d2_opp = zero, r1.opp_int = zero;
  r1.part = P1, r1.d_part = P2, r1.d2_part = P3, r1.part_int = power(cp / lam, lam);
  const RealFn dpi = out.dpi;
  r1.forcing = [dpi](double x) { return -dpi(x); };
  auto& r2 = out.running2;
  r2.own = constant(a2), r2.d_own = zero, r2.d2_own = zero, r2.own_int = linear(a2);
  r2.opp = zero, r2.d_opp = zero, r2.d2_opp = zero, r2.opp_int = zero;
  r2.part = U1, r2.d_part = U2, r2.d2_part = U3, r2.part_int = power(cu / del, del);
  r2.forcing = out.du;
  return out;
}

struct HatX {
  double formula1 = 0.0;  // displayed closed form with r
  double formula2 = 0.0;
  double zeta1 = 0.0;  // root of zeta_i, with r - mu_hat
  double zeta2 = 0.0;
};

/// Both versions of the closed forms; the pipeline uses the zeta roots.
inline HatX hat_x_closed_form(const PollutionConfig& c) {
  HatX h;
  const double kp = std::pow(c.state_scale, c.lambda), ku = std::pow(c.state_scale, c.delta);
  auto root1 = [&](double rate) { return std::pow(rate * c.alpha1 / (c.lambda * kp), -1.0 / (1.0 - c.lambda)); };
  auto root2 = [&](double rate) { return std::pow(rate * c.alpha2 / (c.delta * ku), 1.0 / (c.delta - 1.0)); };
  h.formula1 = root1(c.r);
  h.formula2 = root2(c.r);
  h.zeta1 = root1(c.r - c.mu_hat);
  h.zeta2 = root2(c.r - c.mu_hat);
  if (!(h.zeta1 < h.zeta2)) {
    std::ostringstream os;
    os << "ordering assumption hat_x1 < hat_x2 violated (hat_x1 = " << h.zeta1 << ", hat_x2 = " << h.zeta2
       << "); decrease alpha1 or increase alpha2";
    fail(ErrorKind::assumption, os.str());
  }
  return h;
}

}  // namespace refgame
