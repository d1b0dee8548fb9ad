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
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "refgame/checks.hpp"
#include "refgame/diffusion.hpp"
#include "refgame/fundamental_pair.hpp"
#include "refgame/numerics.hpp"
#include "refgame/parallel.hpp"
#include "refgame/rng.hpp"

namespace refgame {

enum class Player { one = 1, two = 2 };

inline int index(Player p) { return p == Player::one ? 0 : 1; }

/// Stopping payoffs: G_i when player i stops first, L_i when the opponent does.
struct PayoffFunctions {
  RealFn G1, dG1, d2G1;
  RealFn G2, dG2, d2G2;
  RealFn L1, L2;
  RealFn dL1, dL2;  // optional

  const RealFn& G(Player p) const { return p == Player::one ? G1 : G2; }
  const RealFn& dG(Player p) const { return p == Player::one ? dG1 : dG2; }
  const RealFn& d2G(Player p) const { return p == Player::one ? d2G1 : d2G2; }
  const RealFn& L(Player p) const { return p == Player::one ? L1 : L2; }
  const RealFn& dL(Player p) const { return p == Player::one ? dL1 : dL2; }
};

inline CheckItem payoff_order_check(const PayoffFunctions& pf, const std::vector<double>& grid) {
  CheckItem item{"payoff_L_below_G", Status::pass, "", {}};
  double worst = kInf, at = 0.0;
  for (double x : grid) {
    for (Player p : {Player::one, Player::two}) {
      const double gap = pf.G(p)(x) - pf.L(p)(x);
      if (gap < worst) worst = gap, at = x;
    }
  }
  item.evidence = {{"min_G_minus_L", worst}, {"at", at}};
  if (!(worst > 0.0)) {
    item.status = Status::fail;
    item.detail = "L_i < G_i violated on the grid";
  }
  return item;
}

/// theta_i = (G_i' phi - G_i phi') / (w S').
inline RealFn theta(const PayoffFunctions& pf, const FundamentalPair& pair, Player p) {
  const RealFn G = pf.G(p), dG = pf.dG(p);
  return [G, dG, pair](double x) {
    return (dG(x) * pair.phi(x) - G(x) * pair.dphi(x)) / (pair.wronskian * pair.scale_density(x));
  };
}

/// zeta_i = L_X G_i - (r - mu') G_i.
inline RealFn zeta(const PayoffFunctions& pf, const DiffusionModel& m, Player p) {
  if (!pf.d2G(p)) fail(ErrorKind::config, "second derivative of G is required for the sign analysis");
  SmoothFn g{pf.G(p), pf.dG(p), pf.d2G(p)};
  return [g, m](double x) {
    return generator_at(m, g, x, GeneratorVariant::stopping) - m.killing_rate(x) * g.f(x);
  };
}

/// Sign changes of f over a grid, each located by bisection. Exact zeros
/// are skipped and the bracket is taken between nonzero neighbours.
inline std::vector<double> sign_changes(const RealFn& f, const std::vector<double>& grid) {
  std::vector<double> roots;
  int prev = 0;
  double x_prev = grid.front();
  for (double x : grid) {
    const double v = f(x);
    const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) roots.push_back(bisect(f, x_prev, x, 1e-15));
    prev = s;
    x_prev = x;
  }
  return roots;
}

/// Root of zeta_i on [lo, hi]: zeta_1 > 0 to its left, zeta_2 > 0 to its right.
inline double hat_x(const PayoffFunctions& pf, const DiffusionModel& m, Player p, double lo, double hi,
                    std::size_t n = 4000) {
  const RealFn z = zeta(pf, m, p);
  const auto grid = auto_grid(lo, hi, n);
  const auto roots = sign_changes(z, grid);
  const int player = p == Player::one ? 1 : 2;
  if (roots.empty()) {
    std::ostringstream os;
    os << "zeta_" << player << " has no sign change on [" << lo << ", " << hi << "]";
    fail(ErrorKind::assumption, os.str());
  }
  if (roots.size() > 1) {
    std::ostringstream os;
    os << "zeta_" << player << " changes sign " << roots.size() << " times (ambiguous) at";
    for (double r : roots) os << ' ' << r;
    fail(ErrorKind::assumption, os.str());
  }
  const double left = z(grid.front());
  if ((p == Player::one && !(left > 0)) || (p == Player::two && !(left < 0))) {
    std::ostringstream os;
    os << "zeta_" << player << " has the wrong sign orientation around " << roots[0];
    fail(ErrorKind::assumption, os.str());
  }
  return roots[0];
}

// ---------------------------------------------------------------------------
// Threshold system and its solution.

struct Thresholds {
  double a = 0.0;
  double b = 0.0;
};

struct Coeffs {
  double A = 0.0;
  double B = 0.0;
};

struct ThresholdEquilibrium {
  double a_star = 0.0;
  double b_star = 0.0;
  Coeffs v1_coeffs, v2_coeffs;
  std::array<double, 2> residuals{};   // scaled left-hand sides of the system
  std::array<double, 2> smooth_fit{};  // |v1'(a+) - G1'(a)|, |v2'(b-) - G2'(b)|
  std::vector<Thresholds> roots;       // all distinct roots found
  bool multiple_roots = false;
  double hat_x1 = 0.0, hat_x2 = 0.0;
  int iterations = 0;
};

/// The two equations in (a, b); each divided by the sum of the magnitudes
/// of its terms when `scaled`.
inline std::array<double, 2> threshold_residuals(const PayoffFunctions& pf, const FundamentalPair& pair,
                                                 double a, double b, bool scaled = true) {
  const double pa = pair.phi(a), pb = pair.phi(b);
  const double ra = pair.psi(a) / pa, rb = pair.psi(b) / pb;
  const double t1 = theta(pf, pair, Player::one)(a);
  const double t2 = theta(pf, pair, Player::two)(b);
  const double g1 = pf.G1(a) / pa, l1 = pf.L1(b) / pb;
  const double g2 = pf.G2(b) / pb, l2 = pf.L2(a) / pa;
  double e1 = g1 - l1 - t1 * (ra - rb);
  double e2 = g2 - l2 - t2 * (rb - ra);
  if (scaled) {
    e1 /= std::abs(g1) + std::abs(l1) + std::abs(t1) * (std::abs(ra) + std::abs(rb)) + 1e-300;
    e2 /= std::abs(g2) + std::abs(l2) + std::abs(t2) * (std::abs(ra) + std::abs(rb)) + 1e-300;
  }
  return {e1, e2};
}

/// Data of one player's stopping problem: obstacle (own stopping payoff),
/// opponent's stopping payoff, and an optional particular solution p with
/// (L_X - (r - mu')) p = forcing on the continuation region.
struct StoppingData {
  RealFn own, d_own, d2_own;
  RealFn opp, d_opp, d2_opp;
  RealFn part, d_part, d2_part;
  RealFn forcing;
  // Optional antiderivatives, used for exact integration of the value.
  RealFn own_int, opp_int, part_int;

  double p(double x) const { return part ? part(x) : 0.0; }
  double dp(double x) const { return d_part ? d_part(x) : 0.0; }
  double d2p(double x) const { return d2_part ? d2_part(x) : 0.0; }
  double f(double x) const { return forcing ? forcing(x) : 0.0; }
};

inline StoppingData plain_data(const PayoffFunctions& pf, Player p) {
  StoppingData d;
  d.own = pf.G(p);
  d.d_own = pf.dG(p);
  d.d2_own = pf.d2G(p);
  d.opp = pf.L(p);
  d.d_opp = pf.dL(p);
  return d;
}

enum class Region { stop1, wait, stop2 };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::stop1: return "stop1";
    case Region::wait: return "wait";
    case Region::stop2: return "stop2";
  }
  return "?";
}

/// Coefficients (A, B) with A psi + B phi + p = y0 at x0 and y1 at x1.
inline Coeffs boundary_coeffs(const FundamentalPair& pair, double x0, double y0, double x1, double y1) {
  const double p0 = pair.psi(x0), f0 = pair.phi(x0), p1 = pair.psi(x1), f1 = pair.phi(x1);
  const double det = p0 * f1 - p1 * f0;
  if (!(std::abs(det) > 1e-14 * (std::abs(p0 * f1) + std::abs(p1 * f0)))) {
    std::ostringstream os;
    os << "degenerate boundary system at (" << x0 << ", " << x1 << ")";
    fail(ErrorKind::numeric, os.str());
  }
  return {(y0 * f1 - y1 * f0) / det, (p0 * y1 - p1 * y0) / det};
}

/// Value of one player: own payoff on its stopping region, opponent's
/// payoff on the opponent's stopping region, A psi + B phi + p between.
struct PiecewiseValue {
  Player player = Player::one;
  double a = 0.0, b = 0.0;
  Coeffs c;
  StoppingData data;
  FundamentalPair pair;

  Region region(double x) const {
    if (x <= a) return Region::stop1;
    if (x >= b) return Region::stop2;
    return Region::wait;
  }
  bool own_region(Region r) const {
    return (player == Player::one && r == Region::stop1) || (player == Player::two && r == Region::stop2);
  }

  double cont(double x) const { return c.A * pair.psi(x) + c.B * pair.phi(x) + data.p(x); }
  double cont_d(double x) const { return c.A * pair.dpsi(x) + c.B * pair.dphi(x) + data.dp(x); }
  double cont_d2(double x) const { return c.A * pair.d2psi(x) + c.B * pair.d2phi(x) + data.d2p(x); }

  double operator()(double x) const {
    const Region r = region(x);
    if (r == Region::wait) return cont(x);
    return own_region(r) ? data.own(x) : data.opp(x);
  }
  double prime(double x) const {
    const Region r = region(x);
    if (r == Region::wait) return cont_d(x);
    const RealFn& f = own_region(r) ? data.d_own : data.d_opp;
    if (!f) fail(ErrorKind::config, "derivative of the opponent payoff is not available");
    return f(x);
  }
  double second(double x) const {
    const Region r = region(x);
    if (r == Region::wait) return cont_d2(x);
    const RealFn& f = own_region(r) ? data.d2_own : data.d2_opp;
    if (!f) fail(ErrorKind::config, "second derivative of the payoff is not available");
    return f(x);
  }
};

inline PiecewiseValue make_value(Player p, double a, double b, const StoppingData& d, const FundamentalPair& pair) {
  PiecewiseValue v;
  v.player = p;
  v.a = a;
  v.b = b;
  v.data = d;
  v.pair = pair;
  if (p == Player::one)
    v.c = boundary_coeffs(pair, a, d.own(a) - d.p(a), b, d.opp(b) - d.p(b));
  else
    v.c = boundary_coeffs(pair, a, d.opp(a) - d.p(a), b, d.own(b) - d.p(b));
  return v;
}

struct StoppingValues {
  double a = 0.0, b = 0.0;
  PiecewiseValue v1, v2;

  /// |v1'(a+) - G1'(a)| and |v2'(b-) - G2'(b)|.
  std::array<double, 2> smooth_fit() const {
    return {std::abs(v1.cont_d(a) - v1.data.d_own(a)), std::abs(v2.cont_d(b) - v2.data.d_own(b))};
  }
};

inline StoppingValues stopping_values(double a, double b, const StoppingData& d1, const StoppingData& d2,
                                      const FundamentalPair& pair) {
  if (!(a < b)) fail(ErrorKind::domain, "thresholds must satisfy a < b");
  return {a, b, make_value(Player::one, a, b, d1, pair), make_value(Player::two, a, b, d2, pair)};
}

inline StoppingValues stopping_values(const ThresholdEquilibrium& eq, const PayoffFunctions& pf,
                                      const FundamentalPair& pair) {
  return stopping_values(eq.a_star, eq.b_star, plain_data(pf, Player::one), plain_data(pf, Player::two), pair);
}

struct SolverOptions {
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::optional<double> hat_x1, hat_x2;
  std::optional<Thresholds> init;
  int n_start = 8;
  int max_iter = 200;
  double tol = 1e-13;      // scaled residual
  double box_eps = 1e-6;   // fraction of (hat_x2 - hat_x1) kept clear of hat_x
};

/// Root search failure carrying the residual landscape over the box.
class NoEquilibriumError : public Error {
 public:
  struct Sample {
    double a, b, r1, r2;
  };
  NoEquilibriumError(const std::string& what, std::vector<Sample> landscape)
      : Error(ErrorKind::no_equilibrium, what), landscape_(std::move(landscape)) {}
  const std::vector<Sample>& landscape() const { return landscape_; }

 private:
  std::vector<Sample> landscape_;
};

namespace detail {

using Residual = std::function<std::array<double, 2>(double, double)>;

struct Box {
  double a_lo, a_hi, b_lo, b_hi;
  bool inside(double a, double b) const { return a > a_lo && a < a_hi && b > b_lo && b < b_hi; }
};

// Damped Newton with a central-difference Jacobian, kept strictly inside the box.
inline std::optional<Thresholds> damped_newton(const Residual& F, const Box& box, double a, double b,
                                               int max_iter, double tol, int* iters) {
  auto norm = [](const std::array<double, 2>& v) { return std::hypot(v[0], v[1]); };
  std::array<double, 2> f = F(a, b);
  if (!std::isfinite(norm(f))) return std::nullopt;
  for (int it = 0; it < max_iter; ++it) {
    if (norm(f) <= tol) {
      if (iters) *iters = it;
      return Thresholds{a, b};
    }
    // Central differences where possible, one-sided next to the box wall.
    auto partial = [&](double h, bool in_a) {
      auto at = [&](double t) { return in_a ? F(a + t, b) : F(a, b + t); };
      auto ok = [&](double t) { return in_a ? box.inside(a + t, b) : box.inside(a, b + t); };
      std::array<double, 2> lo = f, hi = f;
      double width = 0.0;
      if (ok(h)) hi = at(h), width += h;
      if (ok(-h)) lo = at(-h), width += h;
      if (width == 0.0) return std::array<double, 2>{0.0, 0.0};
      return std::array<double, 2>{(hi[0] - lo[0]) / width, (hi[1] - lo[1]) / width};
    };
    const auto ja = partial(1e-7 * std::max(std::abs(a), box.a_hi - box.a_lo), true);
    const auto jb = partial(1e-7 * std::max(std::abs(b), box.b_hi - box.b_lo), false);
    const double j11 = ja[0], j21 = ja[1], j12 = jb[0], j22 = jb[1];
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) return std::nullopt;
    const double sa = -(j22 * f[0] - j12 * f[1]) / det;
    const double sb = -(-j21 * f[0] + j11 * f[1]) / det;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const double na = a + t * sa, nb = b + t * sb;
      if (!box.inside(na, nb)) continue;
      const auto nf = F(na, nb);
      if (std::isfinite(norm(nf)) && norm(nf) < (1.0 - 1e-4 * t) * norm(f)) {
        a = na, b = nb, f = nf;
        moved = true;
        break;
      }
    }
    if (!moved) {
      if (iters) *iters = it;
      return norm(f) <= 1e3 * tol ? std::optional<Thresholds>(Thresholds{a, b}) : std::nullopt;
    }
  }
  if (iters) *iters = max_iter;
  return norm(f) <= 1e3 * tol ? std::optional<Thresholds>(Thresholds{a, b}) : std::nullopt;
}

inline std::vector<double> start_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    out.push_back(lo > 0.0 && hi / lo > 10.0 ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
  }
  return out;
}

struct MultiStartResult {
  std::vector<Thresholds> roots;
  std::vector<int> iterations;
  std::vector<NoEquilibriumError::Sample> landscape;
};

inline MultiStartResult multi_start(const Residual& F, const Box& box, const SolverOptions& opt) {
  MultiStartResult res;
  std::vector<std::pair<double, double>> starts;
  if (opt.init) starts.push_back({opt.init->a, opt.init->b});
  const auto as = start_grid(box.a_lo, box.a_hi, opt.n_start);
  const auto bs = start_grid(box.b_lo, box.b_hi, opt.n_start);
  for (double a : as)
    for (double b : bs) starts.push_back({a, b});
  for (auto [a0, b0] : starts) {
    const auto f0 = F(a0, b0);
    res.landscape.push_back({a0, b0, f0[0], f0[1]});
    int it = 0;
    const auto root = damped_newton(F, box, a0, b0, opt.max_iter, opt.tol, &it);
    if (!root) continue;
    bool dup = false;
    for (const auto& r : res.roots) {
      if (std::abs(r.a - root->a) <= 1e-7 * std::max(1.0, std::abs(r.a)) &&
          std::abs(r.b - root->b) <= 1e-7 * std::max(1.0, std::abs(r.b)))
        dup = true;
    }
    if (!dup) {
      res.roots.push_back(*root);
      res.iterations.push_back(it);
    }
    if (opt.init && res.roots.size() == 1 && res.landscape.size() == 1) break;  // converged from the given guess
  }
  return res;
}

}  // namespace detail

/// Resolves the search box [x_lo, hat_x1 - eps] x [hat_x2 + eps, x_hi].
inline detail::Box threshold_box(const PayoffFunctions& pf, const DiffusionModel& m, SolverOptions& opt) {
  if (!(opt.x_lo < opt.x_hi)) fail(ErrorKind::config, "solver needs x_lo < x_hi");
  if (!opt.hat_x1) opt.hat_x1 = hat_x(pf, m, Player::one, opt.x_lo, opt.x_hi);
  if (!opt.hat_x2) opt.hat_x2 = hat_x(pf, m, Player::two, opt.x_lo, opt.x_hi);
  const double h1 = *opt.hat_x1, h2 = *opt.hat_x2;
  if (!(h1 < h2)) {
    std::ostringstream os;
    os << "ordering assumption hat_x1 < hat_x2 violated (hat_x1 = " << h1 << ", hat_x2 = " << h2 << ")";
    fail(ErrorKind::assumption, os.str());
  }
  const double eps = opt.box_eps * (h2 - h1);
  return {opt.x_lo, h1 - eps, h2 + eps, opt.x_hi};
}

/// Solves the threshold system in the box a < hat_x1 < hat_x2 < b by damped
/// Newton from an 8x8 grid of starts (or the supplied initial guess).
inline ThresholdEquilibrium solve_thresholds(const PayoffFunctions& pf, const DiffusionModel& m,
                                             const FundamentalPair& pair, SolverOptions opt) {
  const auto box = threshold_box(pf, m, opt);
  detail::Residual F = [&pf, &pair](double a, double b) { return threshold_residuals(pf, pair, a, b, true); };
  auto ms = detail::multi_start(F, box, opt);
  if (ms.roots.empty()) {
    std::ostringstream os;
    os << "no root of the threshold system in [" << box.a_lo << ", " << box.a_hi << "] x [" << box.b_lo << ", "
       << box.b_hi << "]; residual landscape:";
    for (const auto& s : ms.landscape) os << "\n  a=" << s.a << " b=" << s.b << " r=(" << s.r1 << ", " << s.r2 << ")";
    throw NoEquilibriumError(os.str(), ms.landscape);
  }
  ThresholdEquilibrium best;
  double best_fit = kInf;
  for (std::size_t k = 0; k < ms.roots.size(); ++k) {
    const auto& r = ms.roots[k];
    const auto sv = stopping_values(r.a, r.b, plain_data(pf, Player::one), plain_data(pf, Player::two), pair);
    const auto fit = sv.smooth_fit();
    const double combined = fit[0] + fit[1];
    if (combined < best_fit) {
      best_fit = combined;
      best.a_star = r.a;
      best.b_star = r.b;
      best.v1_coeffs = sv.v1.c;
      best.v2_coeffs = sv.v2.c;
      best.smooth_fit = fit;
      best.iterations = ms.iterations[k];
    }
  }
  best.residuals = threshold_residuals(pf, pair, best.a_star, best.b_star, true);
  best.roots = ms.roots;
  best.multiple_roots = ms.roots.size() > 1;
  best.hat_x1 = *opt.hat_x1;
  best.hat_x2 = *opt.hat_x2;
  return best;
}

/// Solves the two smooth-fit equations v1'(a+) = own1'(a), v2'(b-) = own2'(b)
/// directly, without the threshold system.
inline ThresholdEquilibrium solve_smooth_fit(const StoppingData& d1, const StoppingData& d2,
                                             const FundamentalPair& pair, const PayoffFunctions& pf,
                                             const DiffusionModel& m, SolverOptions opt) {
  const auto box = threshold_box(pf, m, opt);
  detail::Residual F = [&](double a, double b) -> std::array<double, 2> {
    const auto sv = stopping_values(a, b, d1, d2, pair);
    const double s1 = std::abs(sv.v1.cont_d(a)) + std::abs(d1.d_own(a)) + 1.0;
    const double s2 = std::abs(sv.v2.cont_d(b)) + std::abs(d2.d_own(b)) + 1.0;
    return {(sv.v1.cont_d(a) - d1.d_own(a)) / s1, (sv.v2.cont_d(b) - d2.d_own(b)) / s2};
  };
  auto ms = detail::multi_start(F, box, opt);
  if (ms.roots.empty()) throw NoEquilibriumError("no root of the smooth-fit equations in the box", ms.landscape);
  ThresholdEquilibrium out;
  out.a_star = ms.roots.front().a;
  out.b_star = ms.roots.front().b;
  const auto sv = stopping_values(out.a_star, out.b_star, d1, d2, pair);
  out.v1_coeffs = sv.v1.c;
  out.v2_coeffs = sv.v2.c;
  out.smooth_fit = sv.smooth_fit();
  out.residuals = F(out.a_star, out.b_star);
  out.roots = ms.roots;
  out.multiple_roots = ms.roots.size() > 1;
  out.hat_x1 = *opt.hat_x1;
  out.hat_x2 = *opt.hat_x2;
  return out;
}

// ---------------------------------------------------------------------------
// Variational inequalities of the stopping game.

struct VariationalOptions {
  double eps = 1e-6;         // relative exclusion around a and b for second derivatives
  double eq_tol = 1e-8;      // scaled equality tolerance
  double ineq_tol = 1e-9;    // scaled inequality tolerance
};

/// (L_X - (r - mu')) v - forcing on each region, and the obstacle v <= own.
inline InequalityReport verify_variational(const StoppingValues& sv, const DiffusionModel& m,
                                           const std::vector<double>& grid, const VariationalOptions& opt = {}) {
  InequalityReport rep;
  const double a = sv.a, b = sv.b;
  const double ex = opt.eps * (b - a);
  auto op = [&m](const PiecewiseValue& v, double x, double val, double d1, double d2) {
    const double s = m.sigma(x);
    return 0.5 * s * s * d2 + m.stopping_drift(x) * d1 - m.killing_rate(x) * val - v.data.f(x);
  };
  ClauseAccumulator eq1("v1_ode_on_continuation", opt.eq_tol), eq2("v2_ode_on_continuation", opt.eq_tol);
  ClauseAccumulator in1("v1_supersolution_below_a", opt.ineq_tol), in2("v2_supersolution_above_b", opt.ineq_tol);
  ClauseAccumulator ob1("v1_obstacle", opt.ineq_tol), ob2("v2_obstacle", opt.ineq_tol);
  for (double x : grid) {
    const double v1 = sv.v1(x), v2 = sv.v2(x);
    ob1.add(x, (v1 - sv.v1.data.own(x)) / std::max(std::abs(v1), 1.0));
    ob2.add(x, (v2 - sv.v2.data.own(x)) / std::max(std::abs(v2), 1.0));
    if (x > a + ex && x < b - ex) {
      const double r1 = op(sv.v1, x, sv.v1.cont(x), sv.v1.cont_d(x), sv.v1.cont_d2(x));
      const double r2 = op(sv.v2, x, sv.v2.cont(x), sv.v2.cont_d(x), sv.v2.cont_d2(x));
      eq1.add(x, std::abs(r1) / std::max(std::abs(v1), 1.0));
      eq2.add(x, std::abs(r2) / std::max(std::abs(v2), 1.0));
    }
    if (x <= a) {
      const double r1 = op(sv.v1, x, v1, sv.v1.data.d_own(x), sv.v1.data.d2_own(x));
      in1.add(x, -r1 / std::max(std::abs(v1), 1.0));
    }
    if (x >= b) {
      const double r2 = op(sv.v2, x, v2, sv.v2.data.d_own(x), sv.v2.data.d2_own(x));
      in2.add(x, -r2 / std::max(std::abs(v2), 1.0));
    }
  }
  for (auto* c : {&eq1, &eq2, &in1, &in2, &ob1, &ob2}) rep.clauses.push_back(c->finish());
  return rep;
}

// ---------------------------------------------------------------------------
// Existence conditions.

struct ExistenceOptions {
  double x_lo = 0.0, x_hi = 0.0;
  std::size_t n_grid = 2000;
  std::size_t n_trend = 40;
  // Integrability diagnostic.
  std::size_t mc_paths = 2000;
  double mc_dt = 2e-2;
  double mc_horizon = 64.0;
  std::uint64_t seed = 12345;
};

namespace detail {

// Status of |f| decaying toward an endpoint along `pts` (ordered toward it).
inline CheckItem decay_trend(const std::string& name, const RealFn& f, const std::vector<double>& pts) {
  CheckItem item{name, Status::pass, "", {}};
  std::vector<double> v;
  for (double x : pts) v.push_back(std::abs(f(x)));
  const double first = v.front(), last = v.back();
  bool tail_monotone = true;
  for (std::size_t i = v.size() / 2; i + 1 < v.size(); ++i)
    if (v[i + 1] > v[i] * (1 + 1e-12)) tail_monotone = false;
  item.evidence = {{"start_x", pts.front()}, {"end_x", pts.back()}, {"start_abs", first}, {"end_abs", last}};
  if (!std::isfinite(last)) {
    item.status = Status::fail;
    item.detail = "ratio is not finite near the endpoint";
  } else if (!(tail_monotone && last <= 1e-3 * std::max(first, 1e-300))) {
    item.status = Status::warn;
    item.detail = "decay toward zero not evident on the truncated grid";
  } else {
    item.detail = "decays on the endpoint-approaching grid";
  }
  return item;
}

inline CheckItem bounded_trend(const std::string& name, const RealFn& f, const std::vector<double>& pts) {
  CheckItem item{name, Status::pass, "", {}};
  std::vector<double> v;
  for (double x : pts) v.push_back(std::abs(f(x)));
  const double mid = v[v.size() / 2], last = v.back();
  item.evidence = {{"mid_abs", mid}, {"end_abs", last}};
  if (!std::isfinite(last)) {
    item.status = Status::fail;
    item.detail = "ratio is not finite near the endpoint";
  } else if (last > 10.0 * std::max(mid, 1e-12) && last > 1e-8) {
    item.status = Status::warn;
    item.detail = "ratio grows toward the endpoint";
  } else {
    item.detail = "bounded on the endpoint-approaching grid";
  }
  return item;
}

inline std::vector<double> toward(double endpoint, double start, std::size_t n) {
  return approach_grid(endpoint, start, n, 6.0);
}

}  // namespace detail

/// Partial integrals E[int_0^T exp(-int (r - mu')) |h(X_t)| dt] for T in a
/// doubling sequence, by Euler simulation of the stopping diffusion.
inline std::vector<std::pair<double, double>> integrability_profile(const DiffusionModel& m, const RealFn& h,
                                                                   double x0, const ExistenceOptions& opt) {
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(opt.mc_horizon / opt.mc_dt));
  std::vector<double> checkpoints;
  for (double T = opt.mc_horizon; T >= 1.0 - 1e-12; T /= 2) checkpoints.insert(checkpoints.begin(), T);
  std::vector<std::vector<double>> per_path(checkpoints.size(), std::vector<double>(opt.mc_paths, 0.0));
  parallel_for(opt.mc_paths, [&](std::size_t path) {
    double x = x0, logd = 0.0, acc = 0.0;
    NormalStream noise(opt.seed ^ 0x5eedULL, path);
    std::size_t k = 0;
    bool alive = true;
    for (std::size_t n = 0; n < n_steps; ++n) {
      const double t1 = static_cast<double>(n + 1) * opt.mc_dt;
      if (alive) {
        const double d = std::exp(logd);
        acc += d * std::abs(h(x)) * opt.mc_dt;
        logd -= m.killing_rate(x) * opt.mc_dt;
        const auto z = noise.normal(n);
        x += m.stopping_drift(x) * opt.mc_dt + m.sigma(x) * std::sqrt(opt.mc_dt) * z;
        if (!m.interval.contains(x)) alive = false;
      }
      while (k < checkpoints.size() && t1 >= checkpoints[k] - 1e-9) per_path[k++][path] = acc;
    }
  });
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < checkpoints.size(); ++k)
    out.push_back({checkpoints[k], estimate(per_path[k]).mean});
  return out;
}

/// Sufficient conditions for existence of threshold equilibria, plus the
/// structural assumptions they rest on. Limits are evaluated as trends on
/// truncated grids.
inline ConditionReport check_existence(const PayoffFunctions& pf, const DiffusionModel& m,
                                       const FundamentalPair& pair, const ExistenceOptions& opt) {
  ConditionReport rep;
  const auto grid = auto_grid(opt.x_lo, opt.x_hi, opt.n_grid);
  rep.add(payoff_order_check(pf, grid));

  std::optional<double> h1, h2;
  for (Player p : {Player::one, Player::two}) {
    CheckItem item{p == Player::one ? "hat_x1" : "hat_x2", Status::pass, "", {}};
    try {
      const double h = hat_x(pf, m, p, opt.x_lo, opt.x_hi);
      (p == Player::one ? h1 : h2) = h;
      item.evidence = {{"value", h}};
      item.detail = "single sign change of zeta on the grid";
    } catch (const Error& e) {
      item.status = Status::fail;
      item.detail = e.what();
    }
    rep.add(item);
  }
  CheckItem order{"ordering_hat_x1_below_hat_x2", Status::pass, "", {}};
  if (h1 && h2) {
    order.evidence = {{"hat_x1", *h1}, {"hat_x2", *h2}};
    if (!(*h1 < *h2)) {
      order.status = Status::fail;
      order.detail = "hat_x1 >= hat_x2";
    }
  } else {
    order.status = Status::fail;
    order.detail = "hat_x unavailable";
  }
  rep.add(order);

  // Sign structure of h = zeta: only a truncated grid is inspected.
  for (Player p : {Player::one, Player::two}) {
    CheckItem item{p == Player::one ? "h_sign_structure_G1" : "h_sign_structure_G2", Status::warn, "", {}};
    const RealFn z = zeta(pf, m, p);
    const double zl = z(grid.front()), zr = z(grid.back());
    item.evidence = {{"h_at_x_lo", zl}, {"h_at_x_hi", zr}};
    const bool ok = p == Player::one ? (zl > 0 && zr < 0) : (zl < 0 && zr > 0);
    if (!ok) {
      item.status = Status::fail;
      item.detail = "endpoint signs of h inconsistent with the required pattern";
    } else {
      item.detail = "sign pattern consistent on the truncated grid; endpoint limits not provable numerically";
    }
    rep.add(item);
  }

  // Endpoint decay of G_i / phi and G_i / psi, and growth of L_i.
  const double lo_end = m.interval.lo, hi_end = m.interval.hi;
  const auto to_lo = detail::toward(lo_end, opt.x_lo, opt.n_trend);
  const auto to_hi = detail::toward(hi_end, opt.x_hi, opt.n_trend);
  const bool pair_global = pair.x_lo <= lo_end && pair.x_hi >= hi_end;
  for (Player p : {Player::one, Player::two}) {
    const std::string s = p == Player::one ? "1" : "2";
    const RealFn G = pf.G(p), L = pf.L(p);
    if (pair_global) {
      rep.add(detail::decay_trend("decay_G" + s + "_over_phi_lower", [&](double x) { return G(x) / pair.phi(x); }, to_lo));
      rep.add(detail::decay_trend("decay_G" + s + "_over_psi_upper", [&](double x) { return G(x) / pair.psi(x); }, to_hi));
      rep.add(detail::bounded_trend("bound_L" + s + "_over_phi_lower", [&](double x) { return L(x) / pair.phi(x); }, to_lo));
      rep.add(detail::bounded_trend("bound_L" + s + "_over_psi_upper", [&](double x) { return L(x) / pair.psi(x); }, to_hi));
    } else {
      CheckItem item{"decay_G" + s, Status::warn, "fundamental pair is windowed; endpoint trends not evaluated", {}};
      rep.add(item);
    }
  }

  // Integrability of the discounted |h| along the stopping diffusion.
  if (h1 && h2 && opt.mc_paths > 0) {
    const double x0 = 0.5 * (*h1 + *h2);
    for (Player p : {Player::one, Player::two}) {
      CheckItem item{p == Player::one ? "integrability_h_G1" : "integrability_h_G2", Status::pass, "", {}};
      const auto prof = integrability_profile(m, zeta(pf, m, p), x0, opt);
      const double total = prof.back().second;
      const double tail = prof.size() > 1 ? total - prof[prof.size() - 2].second : total;
      item.evidence = {{"x0", x0}, {"partial_integral", total}, {"last_doubling_increment", tail}};
      if (std::isfinite(total) && tail <= 1e-3 * std::max(total, 1e-300)) {
        item.detail = "partial integrals settle under horizon doubling";
      } else {
        item.status = Status::warn;
        item.detail = "partial integrals still growing at the horizon";
      }
      rep.add(item);
    }
  }

  // Boundary classification.
  CheckItem bc{"boundary_case", Status::pass, "", {}};
  if (m.lower == BoundaryType::natural && m.upper == BoundaryType::natural) {
    bc.detail = "both boundaries natural: sufficient condition holds";
    rep.add(bc);
  } else if (m.lower == BoundaryType::entrance_not_exit && m.upper == BoundaryType::natural && h1 && h2) {
    bc.detail = "lower boundary entrance-not-exit, upper natural: see conditions 2.i-2.iii";
    rep.add(bc);
    const RealFn t1 = theta(pf, pair, Player::one), t2 = theta(pf, pair, Player::two);
    std::vector<double> tv;
    for (double x : to_lo) tv.push_back(t1(x));
    const double t1_lim = tv.back();
    const bool settled = std::abs(tv.back() - tv[tv.size() - 2]) <= 1e-6 * std::max(std::abs(t1_lim), 1.0);
    // x2_inf solves theta_2 = G_2 / psi on (hat_x2, x_hi).
    RealFn g = [&](double x) { return t2(x) - pf.G2(x) / pair.psi(x); };
    const auto cross = sign_changes(g, auto_grid(*h2 * (1 + 1e-9), opt.x_hi, opt.n_grid));
    CheckItem c1{"case2_i", Status::pass, "", {}};
    if (cross.size() != 1) {
      c1.status = Status::fail;
      c1.detail = "theta_2 = G_2/psi has no unique solution above hat_x2 on the window";
    } else {
      const double rhs = pf.L1(cross[0]) / pair.psi(cross[0]);
      c1.evidence = {{"theta1_lower_limit", t1_lim}, {"x2_inf", cross[0]}, {"L1_over_psi_at_x2_inf", rhs}};
      if (!(t1_lim < rhs)) c1.status = Status::fail, c1.detail = "inequality violated";
      else if (!settled) c1.status = Status::warn, c1.detail = "theta_1 limit not settled on the grid";
    }
    rep.add(c1);
    CheckItem c2{"case2_ii", Status::pass, "", {}};
    const auto z2 = sign_changes([&](double x) { return pf.L1(x) - t1_lim * pair.psi(x); }, grid);
    const double sup = z2.empty() ? -kInf : *std::max_element(z2.begin(), z2.end());
    c2.evidence = {{"sup_crossing", sup}, {"hat_x2", *h2}};
    if (!(sup <= *h2)) c2.status = Status::fail, c2.detail = "crossing lies above hat_x2";
    else if (!settled) c2.status = Status::warn, c2.detail = "theta_1 limit not settled on the grid";
    rep.add(c2);
    CheckItem c3{"case2_iii", Status::warn, "", {}};
    std::vector<double> lv;
    for (double x : to_hi) lv.push_back(pf.L1(x) / pair.phi(x));
    c3.evidence = {{"L1_over_phi_mid", lv[lv.size() / 2]}, {"L1_over_phi_end", lv.back()}};
    if (!std::isfinite(lv.back()) || (lv.back() < -1e3 * std::max(1.0, std::abs(lv[lv.size() / 2])))) {
      c3.status = Status::fail;
      c3.detail = "L1/phi appears to diverge to -infinity";
    } else {
      c3.detail = "L1/phi bounded below on the truncated grid";
    }
    rep.add(c3);
  } else {
    bc.status = Status::warn;
    bc.detail = "no sufficient condition covers the declared boundary types";
    rep.add(bc);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo for the stopping functionals.

struct StoppingMcConfig {
  std::size_t n_paths = 10000;
  double dt = 1e-3;
  double t_max = 50.0;
  std::uint64_t seed = 1;
  bool bridge = true;
  bool keep_samples = false;
};

struct StoppingEstimate {
  Estimate J1, J2;
  double truncated_fraction = 0.0;
  std::size_t excluded = 0;
  bool reliable = true;
  std::vector<double> samples1, samples2;
};

/// MC estimate of both stopping functionals under thresholds (a, b): player 1
/// stops at the first time X <= a, player 2 at the first time X >= b. On a
/// tie player 1 receives its opponent payoff and player 2 its own.
inline StoppingEstimate stopping_payoff_mc(const DiffusionModel& m, const StoppingData& d1, const StoppingData& d2,
                                           double a, double b, double x, const StoppingMcConfig& cfg) {
  m.require_inside(x);
  StoppingEstimate out;
  std::vector<double> s1(cfg.n_paths), s2(cfg.n_paths);
  std::vector<char> excluded(cfg.n_paths, 0), truncated(cfg.n_paths, 0);
  const std::size_t n_steps = static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  const double sdt = std::sqrt(cfg.dt);
  parallel_for(cfg.n_paths, [&](std::size_t path) {
    if (x <= a) {
      s1[path] = d1.own(x);
      s2[path] = d2.opp(x);
      return;
    }
    if (x >= b) {
      s1[path] = d1.opp(x);
      s2[path] = d2.own(x);
      return;
    }
    double X = x, disc = 1.0, run1 = 0.0, run2 = 0.0;
    NormalStream noise(cfg.seed, path);
    auto c0 = m.coefs(X, true);
    double f1 = d1.f(X), f2 = d2.f(X);
    for (std::size_t n = 0; n < n_steps; ++n) {
      if (!(c0.kill > 0.0)) {
        excluded[path] = 1;
        return;
      }
      const double Y = X + c0.drift * cfg.dt + c0.vol * sdt * noise.normal(n);
      bool hit1 = Y <= a, hit2 = Y >= b;
      if (cfg.bridge && !hit1 && !hit2) {
        // Probability that the Brownian bridge between X and Y crossed a level.
        const double v = c0.vol * c0.vol * cfg.dt;
        const double e1 = 2.0 * (X - a) * (Y - a) / v, e2 = 2.0 * (b - X) * (b - Y) / v;
        if (e1 < 40.0 || e2 < 40.0) {
          const auto u = bridge_uniforms(cfg.seed, path, n);
          hit1 = e1 < 40.0 && u.lo < std::exp(-e1);
          hit2 = e2 < 40.0 && u.hi < std::exp(-e2);
        }
      }
      const bool inside = m.interval.contains(Y);
      const auto c1 = inside ? m.coefs(Y, true) : c0;
      const double disc1 = disc * std::exp(-0.5 * (c0.kill + c1.kill) * cfg.dt);
      if (hit1 || hit2) {
        // Stopped within the step: running terms over half a step, payoff
        // at the barrier with the mid-step discount.
        run1 -= disc * f1 * 0.5 * cfg.dt;
        run2 -= disc * f2 * 0.5 * cfg.dt;
        const double dm = std::sqrt(disc * disc1);
        if (hit1 && !hit2) {
          s1[path] = run1 + dm * d1.own(a);
          s2[path] = run2 + dm * d2.opp(a);
        } else if (hit2 && !hit1) {
          s1[path] = run1 + dm * d1.opp(b);
          s2[path] = run2 + dm * d2.own(b);
        } else {
          const double lvl = Y <= a ? a : b;
          s1[path] = run1 + dm * d1.opp(lvl);
          s2[path] = run2 + dm * d2.own(lvl);
        }
        return;
      }
      const double g1 = d1.f(Y), g2 = d2.f(Y);
      run1 -= 0.5 * (disc * f1 + disc1 * g1) * cfg.dt;
      run2 -= 0.5 * (disc * f2 + disc1 * g2) * cfg.dt;
      X = Y, disc = disc1, c0 = c1, f1 = g1, f2 = g2;
    }
    truncated[path] = 1;
    s1[path] = run1;
    s2[path] = run2;
  });
  std::vector<double> k1, k2;
  std::size_t n_trunc = 0;
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    if (excluded[i]) {
      ++out.excluded;
      continue;
    }
    n_trunc += truncated[i];
    k1.push_back(s1[i]);
    k2.push_back(s2[i]);
  }
  out.J1 = estimate(k1);
  out.J2 = estimate(k2);
  out.truncated_fraction = k1.empty() ? 0.0 : static_cast<double>(n_trunc) / static_cast<double>(k1.size());
  out.reliable = out.truncated_fraction <= 1e-3;
  if (cfg.keep_samples) {
    out.samples1 = std::move(s1);
    out.samples2 = std::move(s2);
  }
  return out;
}

inline StoppingEstimate stopping_payoff_mc(const DiffusionModel& m, const PayoffFunctions& pf, double a, double b,
                                           double x, const StoppingMcConfig& cfg) {
  return stopping_payoff_mc(m, plain_data(pf, Player::one), plain_data(pf, Player::two), a, b, x, cfg);
}

}  // namespace refgame
