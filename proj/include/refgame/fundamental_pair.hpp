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

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/interpolators/quintic_hermite.hpp>
#include <boost/numeric/odeint.hpp>

#include "refgame/diffusion.hpp"

namespace refgame {

enum class Provenance { analytic, numeric };

inline const char* to_string(Provenance p) { return p == Provenance::analytic ? "analytic" : "numeric"; }

/// Increasing (psi) and decreasing (phi) positive solutions of
/// L_X u - (r - mu') u = 0, the scale density and the Wronskian
/// w = (psi' phi - phi' psi) / S'.
struct FundamentalPair {
  RealFn psi, dpsi, d2psi;
  RealFn phi, dphi, d2phi;
  RealFn scale_density;
  double wronskian = 0.0;
  double x_ref = 0.0;
  Provenance provenance = Provenance::analytic;
  // Antiderivatives, present for closed-form pairs only.
  RealFn psi_int, phi_int;
  // Range on which the pair is valid (numeric pairs are windowed).
  double x_lo = -kInf, x_hi = kInf;

  bool has_antiderivatives() const { return static_cast<bool>(psi_int) && static_cast<bool>(phi_int); }

  double wronskian_at(double x) const {
    return (dpsi(x) * phi(x) - dphi(x) * psi(x)) / scale_density(x);
  }

  /// Same pair with psi and phi multiplied by positive constants.
  FundamentalPair rescaled(double c_psi, double c_phi) const {
    FundamentalPair p = *this;
    auto scale = [](RealFn f, double c) -> RealFn {
      if (!f) return f;
      return [f, c](double x) { return c * f(x); };
    };
    p.psi = scale(psi, c_psi);
    p.dpsi = scale(dpsi, c_psi);
    p.d2psi = scale(d2psi, c_psi);
    p.psi_int = scale(psi_int, c_psi);
    p.phi = scale(phi, c_phi);
    p.dphi = scale(dphi, c_phi);
    p.d2phi = scale(d2phi, c_phi);
    p.phi_int = scale(phi_int, c_phi);
    p.wronskian = wronskian * c_psi * c_phi;
    return p;
  }
};

/// psi = (x/x_ref)^g1, phi = (x/x_ref)^g2, S' = (x/x_ref)^s on (0, inf).
inline FundamentalPair power_pair(double g1, double g2, double s, double x_ref = 1.0) {
  FundamentalPair p;
  auto pw = [x_ref](double g) -> std::array<RealFn, 4> {
    RealFn f = [g, x_ref](double x) { return std::pow(x / x_ref, g); };
    RealFn df = [g, x_ref](double x) { return g / x_ref * std::pow(x / x_ref, g - 1.0); };
    RealFn d2f = [g, x_ref](double x) { return g * (g - 1.0) / (x_ref * x_ref) * std::pow(x / x_ref, g - 2.0); };
    RealFn F;
    if (std::abs(g + 1.0) < 1e-14)
      F = [x_ref](double x) { return x_ref * std::log(x); };
    else
      F = [g, x_ref](double x) { return x_ref * std::pow(x / x_ref, g + 1.0) / (g + 1.0); };
    return {f, df, d2f, F};
  };
  auto a = pw(g1);
  auto b = pw(g2);
  p.psi = a[0], p.dpsi = a[1], p.d2psi = a[2], p.psi_int = a[3];
  p.phi = b[0], p.dphi = b[1], p.d2phi = b[2], p.phi_int = b[3];
  p.scale_density = [s, x_ref](double x) { return std::pow(x / x_ref, s); };
  p.wronskian = (g1 - g2) / x_ref;
  p.x_ref = x_ref;
  p.x_lo = 0.0;
  p.provenance = Provenance::analytic;
  return p;
}

/// Roots g2 < 0 < g1 of 0.5 s^2 g (g - 1) + (m + s^2) g - (r - m) = 0.
inline std::array<double, 2> gbm_gamma_roots(double mu_hat, double sigma_hat, double r) {
  const double A = 0.5 * sigma_hat * sigma_hat;
  const double B = mu_hat + sigma_hat * sigma_hat - A;
  const double C = -(r - mu_hat);
  const double disc = std::sqrt(B * B - 4.0 * A * C);
  // Stable quadratic formula.
  const double q = -0.5 * (B + std::copysign(disc, B));
  double g1 = q / A, g2 = C / q;
  if (g1 < g2) std::swap(g1, g2);
  return {g1, g2};
}

inline FundamentalPair gbm_pair(double mu_hat, double sigma_hat, double r) {
  const auto g = gbm_gamma_roots(mu_hat, sigma_hat, r);
  const double s = -2.0 * (mu_hat + sigma_hat * sigma_hat) / (sigma_hat * sigma_hat);
  return power_pair(g[0], g[1], s, 1.0);
}

/// Constant coefficients mu, sigma: psi = e^{rho+ (x - x_ref)}, phi = e^{rho- (x - x_ref)}.
inline FundamentalPair exponential_pair(double mu, double sigma, double r, double x_ref = 0.0) {
  const double s2 = sigma * sigma;
  const double disc = std::sqrt(mu * mu + 2.0 * s2 * r);
  const double rp = (-mu + disc) / s2;
  const double rm = (-mu - disc) / s2;
  auto ex = [x_ref](double rho) -> std::array<RealFn, 4> {
    return {[rho, x_ref](double x) { return std::exp(rho * (x - x_ref)); },
            [rho, x_ref](double x) { return rho * std::exp(rho * (x - x_ref)); },
            [rho, x_ref](double x) { return rho * rho * std::exp(rho * (x - x_ref)); },
            [rho, x_ref](double x) { return std::exp(rho * (x - x_ref)) / rho; }};
  };
  auto a = ex(rp);
  auto b = ex(rm);
  FundamentalPair p;
  p.psi = a[0], p.dpsi = a[1], p.d2psi = a[2], p.psi_int = a[3];
  p.phi = b[0], p.dphi = b[1], p.d2phi = b[2], p.phi_int = b[3];
  const double k = -2.0 * mu / s2;
  p.scale_density = [k, x_ref](double x) { return std::exp(k * (x - x_ref)); };
  p.wronskian = rp - rm;
  p.x_ref = x_ref;
  p.provenance = Provenance::analytic;
  return p;
}

/// Pair from user closures; the Wronskian is evaluated at x_ref.
inline FundamentalPair analytic_pair(const DiffusionModel& m, SmoothFn psi, SmoothFn phi, double x_ref,
                                     RealFn scale = {}) {
  FundamentalPair p;
  p.psi = psi.f, p.dpsi = psi.df, p.d2psi = psi.d2f;
  p.phi = phi.f, p.dphi = phi.df, p.d2phi = phi.d2f;
  p.scale_density = scale ? scale : scale_density(m, x_ref);
  p.x_ref = x_ref;
  p.provenance = Provenance::analytic;
  p.wronskian = p.wronskian_at(x_ref);
  if (!(p.wronskian > 0.0)) fail(ErrorKind::construction, "analytic pair has non-positive Wronskian");
  return p;
}

struct NumericPairOptions {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double x_ref = 0.5;
  std::size_t n_grid = 801;
  double decay_target = 35.0;  // log-amplitude by which start-up errors must decay
  double rel_tol = 1e-12;
};

struct PairDiagnostics {
  double max_ode_residual = 0.0;  // scaled by max(|u|, 1)
  double wronskian_rel_spread = 0.0;
  bool psi_increasing = true;
  bool phi_decreasing = true;
  double decay_lower = 0.0;
  double decay_upper = 0.0;
};

namespace detail {

// Local exponential rates of the frozen-coefficient equation at x.
inline std::array<double, 2> frozen_rates(const DiffusionModel& m, double x) {
  const double A = 0.5 * m.sigma(x) * m.sigma(x);
  const double B = m.stopping_drift(x);
  const double C = -m.killing_rate(x);
  const double disc = std::sqrt(B * B - 4.0 * A * C);
  return {(-B + disc) / (2.0 * A), (-B - disc) / (2.0 * A)};
}

struct RiccatiTable {
  std::vector<double> x, q, dq, logu, logs, dlogs, d2logs;
};

// Integrates q = u'/u and log u along x = x_start + dir * t through the
// given nodes (ordered along the direction of travel), together with log S'.
inline RiccatiTable integrate_riccati(const DiffusionModel& m, double x_start, double q0, int dir,
                                      const std::vector<double>& nodes, double rel_tol) {
  using State = std::array<double, 3>;
  auto rhs = [&m, x_start, dir](const State& y, State& dy, double t) {
    const double x = x_start + dir * t;
    const double s = m.sigma(x);
    const double a = 0.5 * s * s;
    const double b = m.stopping_drift(x);
    const double q = y[0];
    const double dqdx = (m.killing_rate(x) - b * q) / a - q * q;
    dy[0] = dir * dqdx;
    dy[1] = dir * q;
    dy[2] = dir * (-b / a);
  };
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_dense_output(rel_tol * 1e-2, rel_tol, ode::runge_kutta_dopri5<State>());
  std::vector<double> times;
  times.reserve(nodes.size() + 1);
  times.push_back(0.0);
  for (double x : nodes) times.push_back(std::max(0.0, dir * (x - x_start)));
  RiccatiTable tab;
  State y{q0, 0.0, 0.0};
  auto obs = [&](const State& s, double t) {
    tab.x.push_back(x_start + dir * t);
    tab.q.push_back(s[0]);
    tab.logu.push_back(s[1]);
    tab.logs.push_back(s[2]);
  };
  ode::integrate_times(stepper, rhs, y, times.begin(), times.end(), times.back() / 2000.0, obs);
  // Drop the start record.
  tab.x.erase(tab.x.begin());
  tab.q.erase(tab.q.begin());
  tab.logu.erase(tab.logu.begin());
  tab.logs.erase(tab.logs.begin());
  for (std::size_t i = 0; i < tab.x.size(); ++i) {
    const double x = tab.x[i];
    const double s = m.sigma(x);
    const double a = 0.5 * s * s;
    const double b = m.stopping_drift(x);
    const double q = tab.q[i];
    tab.dq.push_back((m.killing_rate(x) - b * q) / a - q * q);
    tab.dlogs.push_back(-b / a);
    const double h = 1e-5 * std::max(std::abs(x), 1.0);
    RealFn g = [&m](double z) {
      const double sz = m.sigma(z);
      return -m.stopping_drift(z) / (0.5 * sz * sz);
    };
    tab.d2logs.push_back(m.interval.contains(x - h) && m.interval.contains(x + h) ? central_diff(g, x, h) : 0.0);
  }
  return tab;
}

// Distance outside [x_lo, x_hi] at which to start so that the start-up error
// has decayed by exp(-target).
inline std::pair<double, double> padded_start(const DiffusionModel& m, double edge, int outward,
                                              double width, double target) {
  auto gap = [&m](double z) {
    const auto r = frozen_rates(m, z);
    return r[0] - r[1];
  };
  const double bound = outward < 0 ? m.interval.lo : m.interval.hi;
  double decay = 0.0;
  double start = edge;
  for (int k = 0; k < 80 && decay < target; ++k) {
    double next;
    if (std::isfinite(bound))
      next = bound + (start - bound) * 0.5;
    else
      next = start + outward * width * std::pow(2.0, k) * 0.1;
    if (!m.interval.contains(next)) break;
    decay += std::abs(integrate_adaptive(gap, std::min(start, next), std::max(start, next), 1e-8));
    start = next;
  }
  return {start, decay};
}

}  // namespace detail

/// Numerical pair on [x_lo, x_hi]. Each solution is integrated in the
/// direction in which it dominates (psi rightwards, phi leftwards) as a
/// Riccati equation for u'/u, starting far enough outside the window for
/// the start-up error to have decayed; log u is interpolated by quintic
/// Hermite splines with exact first and second derivatives.
inline FundamentalPair numeric_pair(const DiffusionModel& m, const NumericPairOptions& opt,
                                    PairDiagnostics* diag = nullptr) {
  if (!(opt.x_lo < opt.x_hi) || !m.interval.contains(opt.x_lo) || !m.interval.contains(opt.x_hi))
    fail(ErrorKind::config, "numeric pair window must satisfy x_lo < x_hi inside the state interval");
  if (!(opt.x_ref >= opt.x_lo && opt.x_ref <= opt.x_hi))
    fail(ErrorKind::config, "numeric pair reference point outside window");
  std::vector<double> nodes = auto_grid(opt.x_lo, opt.x_hi, std::max<std::size_t>(opt.n_grid, 8));
  const double width = opt.x_hi - opt.x_lo;
  for (double x : nodes)
    if (!(m.killing_rate(x) > 0.0)) fail(ErrorKind::assumption, "r - mu' must be positive on the window");

  const auto [lo_start, lo_decay] = detail::padded_start(m, opt.x_lo, -1, width, opt.decay_target);
  const auto [hi_start, hi_decay] = detail::padded_start(m, opt.x_hi, +1, width, opt.decay_target);

  auto tab_psi = detail::integrate_riccati(m, lo_start, detail::frozen_rates(m, lo_start)[0], +1, nodes, opt.rel_tol);
  std::vector<double> rev(nodes.rbegin(), nodes.rend());
  auto tab_phi = detail::integrate_riccati(m, hi_start, detail::frozen_rates(m, hi_start)[1], -1, rev, opt.rel_tol);
  auto reverse_all = [](detail::RiccatiTable& t) {
    std::reverse(t.x.begin(), t.x.end());
    std::reverse(t.q.begin(), t.q.end());
    std::reverse(t.dq.begin(), t.dq.end());
    std::reverse(t.logu.begin(), t.logu.end());
    std::reverse(t.logs.begin(), t.logs.end());
    std::reverse(t.dlogs.begin(), t.dlogs.end());
    std::reverse(t.d2logs.begin(), t.d2logs.end());
  };
  reverse_all(tab_phi);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    tab_psi.x[i] = nodes[i];
    tab_phi.x[i] = nodes[i];
  }

  using Hermite = boost::math::interpolators::quintic_hermite<std::vector<double>>;
  auto make = [](std::vector<double> x, std::vector<double> y, std::vector<double> dy,
                 std::vector<double> d2y) {
    return std::make_shared<Hermite>(std::move(x), std::move(y), std::move(dy), std::move(d2y));
  };
  auto logpsi = make(tab_psi.x, tab_psi.logu, tab_psi.q, tab_psi.dq);
  auto logphi = make(tab_phi.x, tab_phi.logu, tab_phi.q, tab_phi.dq);
  auto logs = make(tab_psi.x, tab_psi.logs, tab_psi.dlogs, tab_psi.d2logs);
  const double lpsi_ref = (*logpsi)(opt.x_ref);
  const double lphi_ref = (*logphi)(opt.x_ref);
  const double ls_ref = (*logs)(opt.x_ref);
  const double lo = opt.x_lo, hi = opt.x_hi;
  auto guard = [lo, hi](double x) {
    if (!(x >= lo && x <= hi)) {
      std::ostringstream os;
      os << "x = " << x << " outside numeric pair window [" << lo << ", " << hi << "]";
      fail(ErrorKind::domain, os.str());
    }
  };

  FundamentalPair p;
  p.provenance = Provenance::numeric;
  p.x_ref = opt.x_ref;
  p.x_lo = lo;
  p.x_hi = hi;
  p.psi = [=](double x) { guard(x); return std::exp((*logpsi)(x) - lpsi_ref); };
  p.dpsi = [=](double x) { guard(x); return logpsi->prime(x) * std::exp((*logpsi)(x) - lpsi_ref); };
  p.d2psi = [=](double x) {
    guard(x);
    const double q = logpsi->prime(x);
    return (logpsi->double_prime(x) + q * q) * std::exp((*logpsi)(x) - lpsi_ref);
  };
  p.phi = [=](double x) { guard(x); return std::exp((*logphi)(x) - lphi_ref); };
  p.dphi = [=](double x) { guard(x); return logphi->prime(x) * std::exp((*logphi)(x) - lphi_ref); };
  p.d2phi = [=](double x) {
    guard(x);
    const double q = logphi->prime(x);
    return (logphi->double_prime(x) + q * q) * std::exp((*logphi)(x) - lphi_ref);
  };
  p.scale_density = [=](double x) { guard(x); return std::exp((*logs)(x) - ls_ref); };

  // Monotonicity and Wronskian constancy at the nodes.
  bool inc = true, dec = true;
  std::vector<double> ws;
  ws.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(tab_psi.q[i] > 0.0)) inc = false;
    if (!(tab_phi.q[i] < 0.0)) dec = false;
    const double x = nodes[i];
    ws.push_back(p.wronskian_at(x));
  }
  if (!inc || !dec) {
    if (diag) diag->psi_increasing = inc, diag->phi_decreasing = dec;
    fail(ErrorKind::construction, inc ? "numeric phi is not strictly decreasing" : "numeric psi is not strictly increasing");
  }
  const double w_ref = p.wronskian_at(opt.x_ref);
  double spread = 0.0;
  for (double w : ws) spread = std::max(spread, std::abs(w - w_ref) / std::abs(w_ref));
  if (!(spread <= 1e-4)) {
    std::ostringstream os;
    os << "numeric Wronskian relative spread " << spread << " exceeds 1e-4";
    fail(ErrorKind::numeric, os.str());
  }
  p.wronskian = w_ref;
  if (diag) {
    diag->wronskian_rel_spread = spread;
    diag->decay_lower = lo_decay;
    diag->decay_upper = hi_decay;
  }
  return p;
}

/// ODE residual, Wronskian spread and monotonicity of a pair on a grid.
inline PairDiagnostics diagnose_pair(const DiffusionModel& m, const FundamentalPair& p,
                                     const std::vector<double>& grid) {
  PairDiagnostics d;
  std::vector<double> ws;
  for (double x : grid) {
    const double a = 0.5 * m.sigma(x) * m.sigma(x);
    const double b = m.stopping_drift(x);
    const double k = m.killing_rate(x);
    const double u1 = p.psi(x), u2 = p.phi(x);
    const double r1 = a * p.d2psi(x) + b * p.dpsi(x) - k * u1;
    const double r2 = a * p.d2phi(x) + b * p.dphi(x) - k * u2;
    const double s1 = std::max(std::abs(u1), 1.0);
    const double s2 = std::max(std::abs(u2), 1.0);
    d.max_ode_residual = std::max({d.max_ode_residual, std::abs(r1) / s1, std::abs(r2) / s2});
    if (!(p.dpsi(x) > 0.0)) d.psi_increasing = false;
    if (!(p.dphi(x) < 0.0)) d.phi_decreasing = false;
    ws.push_back(p.wronskian_at(x));
  }
  if (!ws.empty()) {
    double mean = 0.0;
    for (double w : ws) mean += w;
    mean /= static_cast<double>(ws.size());
    double var = 0.0;
    for (double w : ws) var += (w - mean) * (w - mean);
    var /= static_cast<double>(ws.size());
    d.wronskian_rel_spread = std::sqrt(var) / std::abs(mean);
  }
  return d;
}

}  // namespace refgame
