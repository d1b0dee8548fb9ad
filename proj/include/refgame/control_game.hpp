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
#include <sstream>
#include <string>
#include <vector>

#include "refgame/checks.hpp"
#include "refgame/diffusion.hpp"
#include "refgame/numerics.hpp"
#include "refgame/stopping_game.hpp"

namespace refgame {

/// Running profits of the control game; empty members mean none.
struct RunningProfits {
  RealFn profit1, profit2;

  double p1(double x) const { return profit1 ? profit1(x) : 0.0; }
  double p2(double x) const { return profit2 ? profit2(x) : 0.0; }
};

struct Kappas {
  double k1 = 0.0;
  double k2 = 0.0;
};

/// Values of the control game at the reflection levels:
/// k1 = (sigma^2 own1'/2 + mu own1 + profit1)(a) / r,
/// k2 = -(sigma^2 own2'/2 + mu own2 - profit2)(b) / r.
/// Without running profits this is the plain pair of constants; with
/// constant marginal costs it reduces to (mu alpha1 + profit1)(a) / r.
inline Kappas kappas(const StoppingValues& sv, const DiffusionModel& m, const RunningProfits& rp = {}) {
  if (!(m.r > 0.0)) fail(ErrorKind::config, "discount rate r must be positive");
  const double a = sv.a, b = sv.b;
  const double sa = m.sigma(a), sb = m.sigma(b);
  const auto& d1 = sv.v1.data;
  const auto& d2 = sv.v2.data;
  Kappas k;
  k.k1 = (0.5 * sa * sa * d1.d_own(a) + m.mu(a) * d1.own(a) + rp.p1(a)) / m.r;
  k.k2 = -(0.5 * sb * sb * d2.d_own(b) + m.mu(b) * d2.own(b) - rp.p2(b)) / m.r;
  return k;
}

struct ControlValuesOptions {
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::size_t panels_per_region = 64;
  bool use_antiderivatives = true;
};

/// V1(x) = k1 + int_a^x v1 and V2(x) = k2 + int_x^b v2, tabulated as
/// cumulative integrals at panel knots; a and b are always knots.
class ControlValues {
 public:
  ControlValues(const StoppingValues& sv, Kappas k, const ControlValuesOptions& opt) : sv_(sv), k_(k) {
    const double a = sv.a, b = sv.b;
    const double lo = std::min(opt.x_lo, a), hi = std::max(opt.x_hi, b);
    const std::size_t n = std::max<std::size_t>(opt.panels_per_region, 1) + 1;
    auto add = [&](double l, double h) {
      if (!(h > l)) return;
      const auto g = auto_grid(l, h, n);
      knots_.insert(knots_.end(), g.begin(), g.end());
    };
    add(lo, a);
    add(a, b);
    add(b, hi);
    std::sort(knots_.begin(), knots_.end());
    knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
    exact_ = opt.use_antiderivatives;
    cum1_.assign(knots_.size(), 0.0);
    cum2_.assign(knots_.size(), 0.0);
    const std::size_t ia = knot_index(a), ib = knot_index(b);
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
      panel1_.push_back(segment(sv_.v1, knots_[i], knots_[i + 1]));
      panel2_.push_back(segment(sv_.v2, knots_[i], knots_[i + 1]));
    }
    // Cumulative sums outward from a (player 1) and b (player 2).
    for (std::size_t i = ia; i + 1 < knots_.size(); ++i) cum1_[i + 1] = cum1_[i] + panel1_[i];
    for (std::size_t i = ia; i > 0; --i) cum1_[i - 1] = cum1_[i] - panel1_[i - 1];
    for (std::size_t i = ib; i + 1 < knots_.size(); ++i) cum2_[i + 1] = cum2_[i] + panel2_[i];
    for (std::size_t i = ib; i > 0; --i) cum2_[i - 1] = cum2_[i] - panel2_[i - 1];
  }

  double kappa1() const { return k_.k1; }
  double kappa2() const { return k_.k2; }
  double a() const { return sv_.a; }
  double b() const { return sv_.b; }
  const StoppingValues& stopping() const { return sv_; }
  const std::vector<double>& knots() const { return knots_; }
  bool exact_quadrature() const { return exact_; }

  double V1(double x) const { return k_.k1 + integral(sv_.v1, cum1_, x); }
  double V2(double x) const { return k_.k2 - integral(sv_.v2, cum2_, x); }
  double V1_prime(double x) const { return sv_.v1(x); }
  double V2_prime(double x) const { return -sv_.v2(x); }
  double V1_second(double x) const { return sv_.v1.prime(x); }
  double V2_second(double x) const { return -sv_.v2.prime(x); }

 private:
  std::size_t knot_index(double x) const {
    return static_cast<std::size_t>(std::lower_bound(knots_.begin(), knots_.end(), x) - knots_.begin());
  }

  // Antiderivative of v on the region containing (lo, hi), if available.
  RealFn antiderivative(const PiecewiseValue& v, double lo, double hi) const {
    const Region r = v.region(0.5 * (lo + hi));
    const auto& d = v.data;
    if (r == Region::wait) {
      if (!v.pair.has_antiderivatives() || (d.part && !d.part_int)) return {};
      const auto pair = v.pair;
      const Coeffs c = v.c;
      const RealFn P = d.part_int;
      return [pair, c, P](double x) { return c.A * pair.psi_int(x) + c.B * pair.phi_int(x) + (P ? P(x) : 0.0); };
    }
    return v.own_region(r) ? d.own_int : d.opp_int;
  }

  double segment(const PiecewiseValue& v, double lo, double hi) const {
    if (lo == hi) return 0.0;
    double out;
    const RealFn F = exact_ ? antiderivative(v, lo, hi) : RealFn{};
    if (F) {
      out = F(hi) - F(lo);
    } else {
      // Evaluate the region's own formula so that panel ends on a or b
      // use the one-sided branch.
      const Region r = v.region(0.5 * (lo + hi));
      RealFn g;
      if (r == Region::wait)
        g = [&v](double x) { return v.cont(x); };
      else
        g = v.own_region(r) ? v.data.own : v.data.opp;
      out = gauss7(g, lo, hi);
    }
    if (!std::isfinite(out)) {
      std::ostringstream os;
      os << "quadrature failed on panel [" << lo << ", " << hi << "]";
      fail(ErrorKind::numeric, os.str());
    }
    return out;
  }

  // Signed integral from the anchor knot to x.
  double integral(const PiecewiseValue& v, const std::vector<double>& cum, double x) const {
    if (x <= knots_.front()) return cum.front() - long_segment(v, x, knots_.front());
    if (x >= knots_.back()) return cum.back() + long_segment(v, knots_.back(), x);
    std::size_t i = knot_index(x);
    if (knots_[i] == x) return cum[i];
    --i;
    return cum[i] + segment(v, knots_[i], x);
  }

  // Integral over a range outside the tabulated knots, split at region ends.
  double long_segment(const PiecewiseValue& v, double lo, double hi) const {
    const auto g = auto_grid(lo, hi, 65);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) s += segment(v, g[i], g[i + 1]);
    return s;
  }

  StoppingValues sv_;
  Kappas k_;
  bool exact_ = true;
  std::vector<double> knots_, cum1_, cum2_, panel1_, panel2_;
};

inline ControlValues control_values(const StoppingValues& sv, Kappas k, const ControlValuesOptions& opt) {
  return ControlValues(sv, k, opt);
}

struct HjbOptions {
  double eps = 1e-6;        // relative exclusion around a and b
  double eq_tol = 1e-7;     // scaled PDE residual on the continuation region
  double ineq_tol = 1e-9;   // scaled inequality / gradient clauses
};

/// Checks the two coupled variational systems of the control game. With
/// running profits the PDE carries + profit_i; gradient bounds are the own
/// and opponent marginal payoffs of the stopping data.
inline InequalityReport verify_hjb(const ControlValues& cv, const DiffusionModel& m, const std::vector<double>& grid,
                                   const RunningProfits& rp = {}, const HjbOptions& opt = {}) {
  const double a = cv.a(), b = cv.b();
  const double ex = opt.eps * (b - a);
  const auto& d1 = cv.stopping().v1.data;
  const auto& d2 = cv.stopping().v2.data;
  ClauseAccumulator e1("V1_hjb_equality_on_continuation", opt.eq_tol);
  ClauseAccumulator i1("V1_hjb_inequality_below_b", opt.ineq_tol);
  ClauseAccumulator g1("V1_gradient_bound_below_b", opt.ineq_tol);
  ClauseAccumulator b1("V1_gradient_binding_below_a", opt.ineq_tol);
  ClauseAccumulator o1("V1_gradient_above_b", opt.ineq_tol);
  ClauseAccumulator e2("V2_hjb_equality_on_continuation", opt.eq_tol);
  ClauseAccumulator i2("V2_hjb_inequality_above_a", opt.ineq_tol);
  ClauseAccumulator g2("V2_gradient_bound_above_a", opt.ineq_tol);
  ClauseAccumulator b2("V2_gradient_binding_above_b", opt.ineq_tol);
  ClauseAccumulator o2("V2_gradient_below_a", opt.ineq_tol);
  for (double x : grid) {
    const bool near = std::abs(x - a) <= ex || std::abs(x - b) <= ex;
    const double s = m.sigma(x);
    const double V1 = cv.V1(x), V2 = cv.V2(x);
    const double D1 = cv.V1_prime(x), D2 = cv.V2_prime(x);
    const double sc1 = std::max(std::abs(V1), 1.0), sc2 = std::max(std::abs(V2), 1.0);
    if (!near) {
      const double h1 = 0.5 * s * s * cv.V1_second(x) + m.mu(x) * D1 - m.r * V1 + rp.p1(x);
      const double h2 = 0.5 * s * s * cv.V2_second(x) + m.mu(x) * D2 - m.r * V2 + rp.p2(x);
      if (x > a && x < b) {
        e1.add(x, std::abs(h1) / sc1);
        e2.add(x, std::abs(h2) / sc2);
      }
      if (x < b) i1.add(x, h1 / sc1);
      if (x > a) i2.add(x, h2 / sc2);
    }
    if (x < b) g1.add(x, (D1 - d1.own(x)) / std::max(std::abs(d1.own(x)), 1.0));
    if (x < a) b1.add(x, std::abs(D1 - d1.own(x)) / std::max(std::abs(d1.own(x)), 1.0));
    if (x > b) o1.add(x, std::abs(D1 - d1.opp(x)) / std::max(std::abs(d1.opp(x)), 1.0));
    if (x > a) g2.add(x, (-d2.own(x) - D2) / std::max(std::abs(d2.own(x)), 1.0));
    if (x > b) b2.add(x, std::abs(D2 + d2.own(x)) / std::max(std::abs(d2.own(x)), 1.0));
    if (x < a) o2.add(x, std::abs(D2 + d2.opp(x)) / std::max(std::abs(d2.opp(x)), 1.0));
  }
  InequalityReport rep;
  for (auto* c : {&e1, &i1, &g1, &b1, &o1, &e2, &i2, &g2, &b2, &o2}) rep.clauses.push_back(c->finish());
  return rep;
}

struct LinkErrors {
  double construction = 0.0;  // max |V1' - v1|, |V2' + v2| from the stored derivatives
  double finite_difference = 0.0;  // same, with central differences of V
};

/// Differential link between the two games on a grid.
inline LinkErrors link_errors(const ControlValues& cv, const std::vector<double>& grid, double h = 1e-4) {
  LinkErrors e;
  const auto& sv = cv.stopping();
  for (double x : grid) {
    e.construction = std::max({e.construction, std::abs(cv.V1_prime(x) - sv.v1(x)), std::abs(cv.V2_prime(x) + sv.v2(x))});
    const double fd1 = (cv.V1(x + h) - cv.V1(x - h)) / (2 * h);
    const double fd2 = (cv.V2(x + h) - cv.V2(x - h)) / (2 * h);
    e.finite_difference = std::max({e.finite_difference, std::abs(fd1 - sv.v1(x)), std::abs(fd2 + sv.v2(x))});
  }
  return e;
}

}  // namespace refgame
