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
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "refgame/control_game.hpp"
#include "refgame/diffusion.hpp"
#include "refgame/errors.hpp"
#include "refgame/numerics.hpp"
#include "refgame/parallel.hpp"
#include "refgame/rng.hpp"
#include "refgame/stopping_game.hpp"

namespace refgame {

enum class Role { increaser, decreaser };

enum class StrategyKind { none, reflect, lump_at_zero, counter_jump };

/// One player's control rule. `level` is the reflection barrier; a counter
/// jump at `jump_time` pushes the state past the opponent's barrier by
/// `excess` and then keeps reflecting at `level`.
struct Strategy {
  StrategyKind kind = StrategyKind::none;
  double level = std::numeric_limits<double>::quiet_NaN();
  double amount = 0.0;
  double excess = 0.0;
  double jump_time = 0.0;

  static Strategy none() { return {}; }
  static Strategy reflect_at(double level) { return {StrategyKind::reflect, level}; }
  static Strategy lump_at_zero(double amount) {
    Strategy s;
    s.kind = StrategyKind::lump_at_zero;
    s.amount = amount;
    return s;
  }
  static Strategy reflect_then_counter_jump(double level, double excess, double jump_time) {
    return {StrategyKind::counter_jump, level, 0.0, excess, jump_time};
  }

  bool reflects() const {
    return (kind == StrategyKind::reflect || kind == StrategyKind::counter_jump) && std::isfinite(level);
  }
};

inline std::string describe(const Strategy& s) {
  switch (s.kind) {
    case StrategyKind::none:
      return "none";
    case StrategyKind::reflect:
      return "reflect(" + std::to_string(s.level) + ")";
    case StrategyKind::lump_at_zero:
      return "lump(" + std::to_string(s.amount) + ")";
    case StrategyKind::counter_jump:
      return "reflect(" + std::to_string(s.level) + ")+counter_jump(" + std::to_string(s.excess) + "@" +
             std::to_string(s.jump_time) + ")";
  }
  return "?";
}

/// bridge: the continuous control of a step is the overshoot of the
/// Brownian-bridge extremum of the frozen-coefficient step beyond the
/// barrier. projection: the overshoot of the step endpoint (discrete
/// Skorokhod map).
enum class ReflectionScheme { bridge, projection };

struct SimConfig {
  double dt = 1e-3;
  double horizon = 16.0;
  std::uint64_t seed = 1;
  /// Each step consumes `refine` normals of the fine grid dt/refine, so a run
  /// at dt and one at dt/refine share their noise.
  int refine = 1;
  ReflectionScheme scheme = ReflectionScheme::bridge;
  double x_lo = -kInf;
  double x_hi = kInf;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
};

struct Jump {
  std::size_t step;
  double t;
  Role role;
  double from;
  double size;
};

/// Entry n of x, dnu_c, dxi_c belongs to time t[n]: x[n] is the left limit
/// and the continuous increments are those accumulated over (t[n-1], t[n]].
/// Jumps at t[n] are booked in dnu_j[n], dxi_j[n]; n = 0 is the t = 0+ record.
struct ControlPath {
  std::vector<double> t, x, dnu_c, dnu_j, dxi_c, dxi_j;
  std::vector<Jump> jumps;
  double nu_level = std::numeric_limits<double>::quiet_NaN();
  double xi_level = std::numeric_limits<double>::quiet_NaN();
  bool exited = false;
  double exit_time = kInf;
};

namespace detail {

inline void check_sim(const DiffusionModel& m, const Strategy& nu, const Strategy& xi, double x0,
                      const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0) || cfg.steps() == 0)
    fail(ErrorKind::config, "simulation needs dt > 0 and horizon >= dt");
  if (cfg.refine < 1) fail(ErrorKind::config, "refine factor must be at least 1");
  const double lo = std::max(cfg.x_lo, m.interval.lo), hi = std::min(cfg.x_hi, m.interval.hi);
  if (!(x0 > lo && x0 < hi))
    fail(ErrorKind::domain, "start point " + std::to_string(x0) + " is outside the computational interval");
  if (nu.reflects() && xi.reflects() && !(nu.level < xi.level))
    fail(ErrorKind::config, "reflection levels must satisfy a < b");
  if (xi.kind == StrategyKind::counter_jump && !nu.reflects())
    fail(ErrorKind::config, "a counter jump needs an opponent reflection level");
  if (nu.kind == StrategyKind::counter_jump && !xi.reflects())
    fail(ErrorKind::config, "a counter jump needs an opponent reflection level");
  if (nu.amount < 0.0 || xi.amount < 0.0 || nu.excess < 0.0 || xi.excess < 0.0)
    fail(ErrorKind::config, "jump sizes must be nonnegative");
}

inline std::size_t jump_step(const Strategy& s, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s.jump_time / dt)));
}

}  // namespace detail

/// Runs one path of the controlled diffusion and reports events to `vis`:
///   vis.jump(const Jump&)
///   vis.step(n, t0, t1, x_start, x_end, dnu_c, dxi_c)
/// Returns the exit time (kInf if the path stays inside up to the horizon).
template <class Visitor>
double simulate_path(const DiffusionModel& m, const Strategy& nu, const Strategy& xi, double x0, const SimConfig& cfg,
                     std::uint64_t path, Visitor& vis) {
  const std::size_t N = cfg.steps();
  const int sub = cfg.refine;
  const double dt = cfg.dt, h = dt / sub, sh = std::sqrt(h);
  const double lo = std::max(cfg.x_lo, m.interval.lo), hi = std::min(cfg.x_hi, m.interval.hi);
  const double a = nu.reflects() ? nu.level : -kInf;
  const double b = xi.reflects() ? xi.level : kInf;
  const std::size_t n_nu = nu.kind == StrategyKind::counter_jump ? detail::jump_step(nu, dt) : 0;
  const std::size_t n_xi = xi.kind == StrategyKind::counter_jump ? detail::jump_step(xi, dt) : 0;
  NormalStream noise(cfg.seed, path);
  double x = x0;

  auto push = [&](std::size_t n, Role role, double size) {
    if (!(size > 0.0)) return;
    vis.jump(Jump{n, static_cast<double>(n) * dt, role, x, size});
    x += role == Role::increaser ? size : -size;
  };
  auto push_to = [&](std::size_t n, Role role, double target) {
    const double size = role == Role::increaser ? target - x : x - target;
    if (!(size > 0.0)) return;
    push(n, role, size);
    x = target;
  };
  auto jumps = [&](std::size_t n) {
    if (n == 0) {
      if (nu.kind == StrategyKind::lump_at_zero) push(0, Role::increaser, nu.amount);
      if (xi.kind == StrategyKind::lump_at_zero) push(0, Role::decreaser, xi.amount);
    }
    if (n_xi != 0 && n == n_xi) push_to(n, Role::decreaser, nu.level - xi.excess);
    if (n_nu != 0 && n == n_nu) push_to(n, Role::increaser, xi.level + nu.excess);
    if (x < a) push_to(n, Role::increaser, a);
    if (x > b) push_to(n, Role::decreaser, b);
  };

  jumps(0);
  for (std::size_t n = 1; n <= N; ++n) {
    const auto c = m.coefs(x, false);
    const double var = c.vol * c.vol * h;
    double y = x, ymin = x, ymax = x;
    for (int j = 0; j < sub; ++j) {
      const std::uint64_t fine = (n - 1) * static_cast<std::uint64_t>(sub) + static_cast<std::uint64_t>(j);
      const double y1 = y + c.drift * h + c.vol * sh * noise.normal(fine);
      if (cfg.scheme == ReflectionScheme::bridge && var > 0.0) {
        // Extremes of the frozen-coefficient bridge, drawn only when the
        // barrier is within reach.
        const double ea = 2.0 * (y - a) * (y1 - a) / var, eb = 2.0 * (b - y) * (b - y1) / var;
        const bool near_a = y1 <= a || y <= a || ea < 40.0;
        const bool near_b = y1 >= b || y >= b || eb < 40.0;
        if (near_a || near_b) {
          const auto u = bridge_uniforms(cfg.seed, path, fine);
          if (near_a) {
            const double d = y1 - y;
            ymin = std::min(ymin, 0.5 * (y + y1 - std::sqrt(d * d - 2.0 * var * std::log(u.lo))));
          }
          if (near_b) {
            const double d = y1 - y;
            ymax = std::max(ymax, 0.5 * (y + y1 + std::sqrt(d * d - 2.0 * var * std::log(u.hi))));
          }
        }
      }
      y = y1;
    }
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
    if (cfg.scheme == ReflectionScheme::projection) ymin = ymax = y;
    double dnu = std::max(0.0, a - ymin), dxi = std::max(0.0, ymax - b);
    double x1 = y + dnu - dxi;
    if (x1 < a) {
      dnu += a - x1;
      x1 = a;
    }
    if (x1 > b) {
      dxi += x1 - b;
      x1 = b;
    }
    const double t0 = static_cast<double>(n - 1) * dt, t1 = static_cast<double>(n) * dt;
    if (!(x1 > lo && x1 < hi)) return t1;
    vis.step(n, t0, t1, x, x1, dnu, dxi);
    x = x1;
    jumps(n);
  }
  return kInf;
}

namespace detail {

struct PathRecorder {
  ControlPath& p;
  void jump(const Jump& j) {
    p.jumps.push_back(j);
    (j.role == Role::increaser ? p.dnu_j : p.dxi_j)[j.step] += j.size;
  }
  void step(std::size_t n, double, double t1, double, double x1, double dnu, double dxi) {
    p.t.push_back(t1);
    p.x.push_back(x1);
    p.dnu_c.push_back(dnu);
    p.dxi_c.push_back(dxi);
    p.dnu_j.push_back(0.0);
    p.dxi_j.push_back(0.0);
    (void)n;
  }
};

}  // namespace detail

/// Records one full path (path index `path` of the seed's streams).
inline ControlPath simulate(const DiffusionModel& m, const Strategy& nu, const Strategy& xi, double x0,
                            const SimConfig& cfg, std::uint64_t path = 0) {
  detail::check_sim(m, nu, xi, x0, cfg);
  ControlPath p;
  p.nu_level = nu.reflects() ? nu.level : std::numeric_limits<double>::quiet_NaN();
  p.xi_level = xi.reflects() ? xi.level : std::numeric_limits<double>::quiet_NaN();
  const std::size_t N = cfg.steps();
  p.t.reserve(N + 1);
  p.x.reserve(N + 1);
  p.t.push_back(0.0);
  p.x.push_back(x0);
  p.dnu_c.push_back(0.0);
  p.dxi_c.push_back(0.0);
  p.dnu_j.push_back(0.0);
  p.dxi_j.push_back(0.0);
  detail::PathRecorder rec{p};
  p.exit_time = simulate_path(m, nu, xi, x0, cfg, path, rec);
  p.exited = std::isfinite(p.exit_time);
  return p;
}

// Cost integrals.

/// Integral of g over the displacement of one jump: +z for the increaser,
/// -z for the decreaser.
inline double jump_integral(const RealFn& g, double from, double size, Role role) {
  if (!(size > 0.0)) return 0.0;
  const double s = role == Role::increaser ? 1.0 : -1.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&](double z) { return g(from + s * z); }, 0.0, size, 10, 1e-12, &err);
  if (!std::isfinite(v))
    fail(ErrorKind::numeric, "cost integrand not finite on the jump from " + std::to_string(from) + " of size " +
                                 std::to_string(size));
  return v;
}

/// Sum of g at the start of k equal sub-jumps: the Riemann-Stieltjes cost of
/// a jump split into k back-to-back pieces.
inline double chattering_cost(const RealFn& g, double from, double size, Role role, int k) {
  const double s = role == Role::increaser ? 1.0 : -1.0, piece = size / k;
  double c = 0.0;
  for (int i = 0; i < k; ++i) c += g(from + s * i * piece) * piece;
  return c;
}

/// Discounted cost of one control along a recorded path: continuous part at
/// the barrier with the mid-step discount, jumps through jump_integral.
inline double zhu_integral(const ControlPath& p, const RealFn& g, Role role, double r) {
  const auto& dc = role == Role::increaser ? p.dnu_c : p.dxi_c;
  const double level = role == Role::increaser ? p.nu_level : p.xi_level;
  double total = 0.0;
  for (std::size_t n = 1; n < dc.size(); ++n) {
    if (!(dc[n] > 0.0)) continue;
    const double tm = 0.5 * (p.t[n - 1] + p.t[n]);
    const double at = std::isfinite(level) ? level : p.x[n];
    total += std::exp(-r * tm) * g(at) * dc[n];
  }
  for (const auto& j : p.jumps)
    if (j.role == role) total += std::exp(-r * j.t) * jump_integral(g, j.from, j.size, role);
  return total;
}

// Payoff functionals.

/// Player 1 earns running1 and xi_reward1 per unit of xi and pays nu_cost1
/// per unit of nu; player 2 earns running2 and nu_reward2 per unit of nu and
/// pays xi_cost2 per unit of xi. Null functions count as zero. Jumps are
/// integrated over their displacement unless the marginals are constant.
struct ControlPayoffs {
  RunningProfits running;
  RealFn nu_cost1, xi_reward1, xi_cost2, nu_reward2;
  bool constant_marginals = false;
};

/// The functionals with marginal payoffs G, L.
inline ControlPayoffs zhu_payoffs(const PayoffFunctions& pf) {
  ControlPayoffs c;
  c.nu_cost1 = pf.G1;
  c.xi_reward1 = pf.L1;
  c.xi_cost2 = pf.G2;
  c.nu_reward2 = pf.L2;
  return c;
}

/// Running profits with constant marginal costs and rewards.
inline ControlPayoffs linear_payoffs(RunningProfits running, double nu_cost1, double xi_reward1, double xi_cost2,
                                     double nu_reward2) {
  ControlPayoffs c;
  c.running = std::move(running);
  auto k = [](double v) -> RealFn {
    if (v == 0.0) return {};
    return [v](double) { return v; };
  };
  c.nu_cost1 = k(nu_cost1);
  c.xi_reward1 = k(xi_reward1);
  c.xi_cost2 = k(xi_cost2);
  c.nu_reward2 = k(nu_reward2);
  c.constant_marginals = true;
  return c;
}

/// Pathwise diagnostics of the reflection scheme.
struct PathAudit {
  std::size_t simultaneous_jumps = 0;
  double band_excess = 0.0;
  double flat_off_nu = 0.0;
  double flat_off_xi = 0.0;
  double nu_total = 0.0;
  double xi_total = 0.0;

  void merge(const PathAudit& o) {
    simultaneous_jumps += o.simultaneous_jumps;
    band_excess = std::max(band_excess, o.band_excess);
    flat_off_nu += o.flat_off_nu;
    flat_off_xi += o.flat_off_xi;
    nu_total += o.nu_total;
    xi_total += o.xi_total;
  }
};

namespace detail {

inline double marginal(const RealFn& g, bool constant, double from, double size, Role role) {
  if (!g) return 0.0;
  return constant ? g(from) * size : jump_integral(g, from, size, role);
}

struct PayoffAccumulator {
  PayoffAccumulator(const ControlPayoffs& p, double r_, double a_, double b_, double tol_)
      : pay(p), r(r_), a(a_), b(b_), tol(tol_) {}

  const ControlPayoffs& pay;
  double r, a, b, tol;
  double psi1 = 0.0, psi2 = 0.0;
  PathAudit audit;
  std::size_t last_nu = ~std::size_t{0}, last_xi = ~std::size_t{0};

  double eval(const RealFn& g, double x) const { return g ? g(x) : 0.0; }

  void jump(const Jump& j) {
    const double d = std::exp(-r * j.t);
    if (j.role == Role::increaser) {
      psi1 -= d * marginal(pay.nu_cost1, pay.constant_marginals, j.from, j.size, j.role);
      psi2 += d * marginal(pay.nu_reward2, pay.constant_marginals, j.from, j.size, j.role);
      if (last_xi == j.step) ++audit.simultaneous_jumps;
      last_nu = j.step;
      audit.nu_total += j.size;
    } else {
      psi1 += d * marginal(pay.xi_reward1, pay.constant_marginals, j.from, j.size, j.role);
      psi2 -= d * marginal(pay.xi_cost2, pay.constant_marginals, j.from, j.size, j.role);
      if (last_nu == j.step) ++audit.simultaneous_jumps;
      last_xi = j.step;
      audit.xi_total += j.size;
    }
  }

  void step(std::size_t, double t0, double t1, double x0, double x1, double dnu, double dxi) {
    const double d0 = std::exp(-r * t0), d1 = std::exp(-r * t1), dm = std::exp(-r * 0.5 * (t0 + t1));
    const double dt = t1 - t0;
    if (pay.running.profit1) psi1 += 0.5 * dt * (d0 * pay.running.profit1(x0) + d1 * pay.running.profit1(x1));
    if (pay.running.profit2) psi2 += 0.5 * dt * (d0 * pay.running.profit2(x0) + d1 * pay.running.profit2(x1));
    if (dnu > 0.0) {
      psi1 -= dm * eval(pay.nu_cost1, a) * dnu;
      psi2 += dm * eval(pay.nu_reward2, a) * dnu;
      if (std::min(x0, x1) > a + tol) audit.flat_off_nu += dnu;
      audit.nu_total += dnu;
    }
    if (dxi > 0.0) {
      psi1 += dm * eval(pay.xi_reward1, b) * dxi;
      psi2 -= dm * eval(pay.xi_cost2, b) * dxi;
      if (std::max(x0, x1) < b - tol) audit.flat_off_xi += dxi;
      audit.xi_total += dxi;
    }
    audit.band_excess = std::max({audit.band_excess, a - x1, x1 - b});
  }
};

}  // namespace detail

/// Band tolerance c * sigma_max * sqrt(dt) for reflected paths.
inline double band_tolerance(const DiffusionModel& m, const Strategy& nu, const Strategy& xi, double dt,
                             double c = 6.0) {
  double smax = 0.0;
  if (nu.reflects() && xi.reflects()) {
    for (double x : linspace(nu.level, xi.level, 65)) smax = std::max(smax, std::abs(m.sigma(x)));
  } else if (nu.reflects()) {
    smax = std::abs(m.sigma(nu.level));
  } else if (xi.reflects()) {
    smax = std::abs(m.sigma(xi.level));
  }
  return c * smax * std::sqrt(dt);
}

struct ControlMcConfig {
  std::size_t n_paths = 10000;
  SimConfig sim;
  bool keep_samples = false;
  double band_c = 6.0;
};

struct ControlEstimate {
  Estimate psi1, psi2;
  std::size_t n_paths = 0;
  std::size_t exited = 0;
  double exit_fraction = 0.0;
  /// Mean discount factor at the exit time over all paths.
  double leaked_mass = 0.0;
  /// Discount factor at the horizon (weight of the truncated tail).
  double tail_discount = 0.0;
  bool reliable = true;
  double tol_ref = 0.0;
  PathAudit audit;
  std::vector<double> samples1, samples2;
};

/// MC estimate of both functionals. Path i uses the noise streams of
/// (seed, i), so runs that differ only in strategies share their noise.
inline ControlEstimate control_payoff_mc(const DiffusionModel& m, const ControlPayoffs& pay, const Strategy& nu,
                                         const Strategy& xi, double x0, const ControlMcConfig& cfg) {
  detail::check_sim(m, nu, xi, x0, cfg.sim);
  if (cfg.n_paths == 0) fail(ErrorKind::config, "n_paths must be positive");
  ControlEstimate out;
  out.n_paths = cfg.n_paths;
  out.tol_ref = band_tolerance(m, nu, xi, cfg.sim.dt, cfg.band_c);
  const double a = nu.reflects() ? nu.level : -kInf, b = xi.reflects() ? xi.level : kInf;
  std::vector<double> s1(cfg.n_paths), s2(cfg.n_paths), te(cfg.n_paths);
  std::vector<PathAudit> audits(cfg.n_paths);
  parallel_for(cfg.n_paths, [&](std::size_t i) {
    detail::PayoffAccumulator acc{pay, m.r, a, b, out.tol_ref};
    te[i] = simulate_path(m, nu, xi, x0, cfg.sim, i, acc);
    s1[i] = acc.psi1;
    s2[i] = acc.psi2;
    audits[i] = acc.audit;
  });
  std::vector<double> leak(cfg.n_paths, 0.0);
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    out.audit.merge(audits[i]);
    if (std::isfinite(te[i])) {
      ++out.exited;
      leak[i] = std::exp(-m.r * te[i]);
    }
  }
  out.psi1 = estimate(s1);
  out.psi2 = estimate(s2);
  out.exit_fraction = static_cast<double>(out.exited) / static_cast<double>(cfg.n_paths);
  out.leaked_mass = pairwise_sum(leak) / static_cast<double>(cfg.n_paths);
  out.tail_discount = std::exp(-m.r * static_cast<double>(cfg.sim.steps()) * cfg.sim.dt);
  out.reliable = out.exit_fraction <= 1e-3;
  if (cfg.keep_samples) {
    out.samples1 = std::move(s1);
    out.samples2 = std::move(s2);
  }
  return out;
}

/// Equilibrium strategies: reflection at a by the increaser and at b by the
/// decreaser, with the initial jumps at t = 0+.
inline std::pair<Strategy, Strategy> equilibrium_strategies(double a, double b) {
  return {Strategy::reflect_at(a), Strategy::reflect_at(b)};
}

// Recursive construction of the one-sided reflection.

struct PicardResult {
  std::vector<double> x, nu;
  int iterations = 0;
  bool converged = false;
  double last_change = kInf;
};

/// Fixed-point iteration for the reflection at a of the Euler scheme driven
/// by `normals` against a given cumulative decreasing control `xi` (xi[n] is
/// its value right after t_n). Iterate k freezes the coefficients along
/// iterate k - 1. Starts from max(x0, a), the state after the initial jump.
inline PicardResult picard_reflection(const DiffusionModel& m, double a, double x0, double dt,
                                      std::span<const double> normals, std::span<const double> xi,
                                      int max_iter = -1, double tol = 1e-13) {
  const std::size_t N = normals.size();
  if (xi.size() != N + 1) fail(ErrorKind::config, "control path must have one entry per grid time");
  if (max_iter < 0) max_iter = static_cast<int>(N) + 2;
  const double s = std::max(x0, a), sdt = std::sqrt(dt);
  PicardResult res;
  std::vector<double> prev(N + 1, s), next(N + 1), nu(N + 1);
  for (int k = 1; k <= max_iter; ++k) {
    double drive = s, sup = 0.0;
    for (std::size_t n = 0; n <= N; ++n) {
      if (n > 0) {
        const auto c = m.coefs(prev[n - 1], false);
        drive += c.drift * dt + c.vol * sdt * normals[n - 1];
      }
      const double d = drive - xi[n];
      sup = std::max(sup, a - d);
      nu[n] = sup;
      next[n] = d + sup;
    }
    double change = 0.0;
    for (std::size_t n = 0; n <= N; ++n) change = std::max(change, std::abs(next[n] - prev[n]));
    std::swap(prev, next);
    res.iterations = k;
    res.last_change = change;
    if (change <= tol) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(prev);
  res.nu = std::move(nu);
  return res;
}

// Unilateral deviation test.

struct Deviation {
  Player player = Player::one;
  std::string label;
  Strategy strategy;
  /// Threshold shift in units of b - a; NaN for the other kinds.
  double shift = std::numeric_limits<double>::quiet_NaN();
};

struct NashOptions {
  ControlMcConfig mc;
  std::vector<double> shifts = {-0.2, -0.1, -0.05, -0.025, 0.025, 0.05, 0.1, 0.2};
  bool inaction = true;
  bool lump = true;
  double lump_fraction = 0.5;
  double z = 3.0;
  /// Without common random numbers deviation k runs on seed + k + 1 and the
  /// differences are unpaired.
  bool crn = true;
};

struct DeviationRow {
  Player player = Player::one;
  std::string label;
  std::string strategy;
  double shift = std::numeric_limits<double>::quiet_NaN();
  Estimate payoff;
  Estimate diff;
  double bound = 0.0;
  bool ok = true;
  double exit_fraction = 0.0;
  double leaked_mass = 0.0;
  bool reliable = true;
  std::size_t simultaneous_jumps = 0;
};

struct NashReport {
  double x0 = 0.0, a = 0.0, b = 0.0;
  Estimate eq1, eq2;
  ControlEstimate equilibrium;
  std::vector<DeviationRow> rows;
  std::vector<std::string> skipped;
  double spearman1 = 0.0, spearman2 = 0.0;
  bool ok = true;
};

/// Threshold shifts, inaction and a lump jump at t = 0 for each player. Lumps
/// that would land beyond the opponent's barrier (and so force a simultaneous
/// jump) are left out and listed in `skipped`.
inline std::vector<Deviation> deviation_menu(const DiffusionModel& m, double a, double b, double x0,
                                             const NashOptions& opt, std::vector<std::string>* skipped = nullptr) {
  std::vector<Deviation> out;
  const double w = b - a;
  auto note = [&](const std::string& s) {
    if (skipped) skipped->push_back(s);
  };
  for (double s : opt.shifts) {
    const double lv = a + s * w;
    if (lv < b && m.interval.contains(lv))
      out.push_back({Player::one, "shift_a", Strategy::reflect_at(lv), s});
    else
      note("player 1 shift " + std::to_string(s) + " leaves the admissible range");
  }
  if (opt.inaction) out.push_back({Player::one, "none", Strategy::none()});
  if (opt.lump) {
    if (x0 < b)
      out.push_back({Player::one, "lump", Strategy::lump_at_zero(opt.lump_fraction * (b - x0))});
    else
      note("player 1 lump: start at or above b forces a simultaneous jump");
  }
  for (double s : opt.shifts) {
    const double lv = b + s * w;
    if (lv > a && m.interval.contains(lv))
      out.push_back({Player::two, "shift_b", Strategy::reflect_at(lv), s});
    else
      note("player 2 shift " + std::to_string(s) + " leaves the admissible range");
  }
  if (opt.inaction) out.push_back({Player::two, "none", Strategy::none()});
  if (opt.lump) {
    if (x0 > a)
      out.push_back({Player::two, "lump", Strategy::lump_at_zero(opt.lump_fraction * (x0 - a))});
    else
      note("player 2 lump: start at or below a forces a simultaneous jump");
  }
  return out;
}

/// Each deviation is run against the opponent's equilibrium strategy with
/// the equilibrium's noise; a row passes when the deviator's paired gain is
/// at most z standard errors. This is evidence over a finite menu, not a
/// proof of optimality.
inline NashReport verify_nash(const DiffusionModel& m, const ControlPayoffs& pay, double a, double b, double x0,
                              const NashOptions& opt) {
  NashReport rep;
  rep.x0 = x0;
  rep.a = a;
  rep.b = b;
  auto mc = opt.mc;
  mc.keep_samples = true;
  const auto [nu_eq, xi_eq] = equilibrium_strategies(a, b);
  rep.equilibrium = control_payoff_mc(m, pay, nu_eq, xi_eq, x0, mc);
  rep.eq1 = rep.equilibrium.psi1;
  rep.eq2 = rep.equilibrium.psi2;
  const auto menu = deviation_menu(m, a, b, x0, opt, &rep.skipped);
  std::vector<double> d1{0.0}, p1{rep.eq1.mean}, d2{0.0}, p2{rep.eq2.mean};
  for (std::size_t k = 0; k < menu.size(); ++k) {
    const auto& dev = menu[k];
    const bool one = dev.player == Player::one;
    auto mk = mc;
    if (!opt.crn) mk.sim.seed = mc.sim.seed + k + 1;
    const auto est = one ? control_payoff_mc(m, pay, dev.strategy, xi_eq, x0, mk)
                         : control_payoff_mc(m, pay, nu_eq, dev.strategy, x0, mk);
    DeviationRow row;
    row.player = dev.player;
    row.label = dev.label;
    row.strategy = describe(dev.strategy);
    row.shift = dev.shift;
    row.payoff = one ? est.psi1 : est.psi2;
    if (opt.crn) {
      row.diff = one ? paired_difference(est.samples1, rep.equilibrium.samples1)
                     : paired_difference(est.samples2, rep.equilibrium.samples2);
    } else {
      const auto& e = one ? rep.eq1 : rep.eq2;
      row.diff = {row.payoff.mean - e.mean, std::hypot(row.payoff.se, e.se), row.payoff.n};
    }
    const double scale = std::max(1.0, std::abs(one ? rep.eq1.mean : rep.eq2.mean));
    row.bound = opt.z * row.diff.se + 1e-12 * scale;
    row.ok = row.diff.mean <= row.bound;
    row.exit_fraction = est.exit_fraction;
    row.leaked_mass = est.leaked_mass;
    row.reliable = est.reliable;
    row.simultaneous_jumps = est.audit.simultaneous_jumps;
    rep.ok = rep.ok && row.ok;
    if (std::isfinite(dev.shift)) {
      (one ? d1 : d2).push_back(std::abs(dev.shift));
      (one ? p1 : p2).push_back(row.payoff.mean);
    }
    rep.rows.push_back(std::move(row));
  }
  if (!opt.mc.keep_samples) {
    rep.equilibrium.samples1.clear();
    rep.equilibrium.samples2.clear();
  }
  rep.spearman1 = d1.size() > 2 ? spearman(d1, p1) : 0.0;
  rep.spearman2 = d2.size() > 2 ? spearman(d2, p2) : 0.0;
  return rep;
}

// Pathwise comparison for a counter jump through the opponent's barrier.

struct CounterJumpSpec {
  double alpha2 = 1.0;
  double beta2 = 2.0;
  double a = 1.0;
  double b = kInf;
  double excess = 0.5;
  double t0 = 1.0;
  RealFn profit2;
};

struct PathwiseRow {
  std::size_t path = 0;
  bool triggered = false;
  double t0 = 0.0;
  double payoff_xi = 0.0;
  double payoff_xi0 = 0.0;
  double gap = 0.0;
  double expected = 0.0;
  double error = 0.0;
};

struct PathwiseComparison {
  std::vector<PathwiseRow> rows;
  std::size_t triggered = 0;
  double max_error = 0.0;
  double tol = 0.0;
  bool ok = true;
  std::string notice;
};

/// Player 1 reflects at a. Player 2 plays xi: reflect at b and at t0 jump to
/// a - excess; or xi0: the same with the jump cut so the state lands at a.
/// Player 2 earns profit2, alpha2 per unit of nu and pays beta2 per unit of
/// xi. On each path the gap payoff(xi0) - payoff(xi) must equal
/// exp(-r t0) (beta2 - alpha2) excess.
inline PathwiseComparison counter_jump_dominance(const DiffusionModel& m, const CounterJumpSpec& spec, double x0,
                                             std::size_t n_paths, const SimConfig& sim, double tol = 1e-10) {
  if (!(spec.alpha2 <= spec.beta2)) fail(ErrorKind::config, "need alpha2 <= beta2 for the counter-jump comparison");
  if (!(spec.excess >= 0.0)) fail(ErrorKind::config, "excess must be nonnegative");
  if (!(spec.a - spec.excess > m.interval.lo)) fail(ErrorKind::domain, "counter jump lands outside the state space");
  const Strategy nu = Strategy::reflect_at(spec.a);
  const Strategy xi = Strategy::reflect_then_counter_jump(spec.b, spec.excess, spec.t0);
  const Strategy xi0 = Strategy::reflect_then_counter_jump(spec.b, 0.0, spec.t0);
  detail::check_sim(m, nu, xi, x0, sim);
  const auto pay = linear_payoffs({nullptr, spec.profit2}, 0.0, 0.0, spec.beta2, spec.alpha2);
  const double t_jump = static_cast<double>(detail::jump_step(xi, sim.dt)) * sim.dt;
  PathwiseComparison out;
  out.tol = tol;
  out.rows.resize(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    detail::PayoffAccumulator p{pay, m.r, spec.a, spec.b, 0.0}, p0{pay, m.r, spec.a, spec.b, 0.0};
    const double te = simulate_path(m, nu, xi, x0, sim, i, p);
    simulate_path(m, nu, xi0, x0, sim, i, p0);
    auto& row = out.rows[i];
    row.path = i;
    row.t0 = t_jump;
    row.triggered = te > t_jump && t_jump <= static_cast<double>(sim.steps()) * sim.dt;
    row.payoff_xi = p.psi2;
    row.payoff_xi0 = p0.psi2;
    row.gap = p0.psi2 - p.psi2;
    row.expected = row.triggered ? std::exp(-m.r * t_jump) * (spec.beta2 - spec.alpha2) * spec.excess : 0.0;
    row.error = std::abs(row.gap - row.expected);
  });
  for (const auto& row : out.rows) {
    out.triggered += row.triggered;
    out.max_error = std::max(out.max_error, row.error);
  }
  out.ok = out.max_error <= tol;
  if (out.triggered == 0) out.notice = "counter jump never triggered: scenario not exercised";
  return out;
}

}  // namespace refgame
