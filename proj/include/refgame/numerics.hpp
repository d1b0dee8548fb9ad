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
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "refgame/errors.hpp"

namespace refgame {

using RealFn = std::function<double(double)>;

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = (i + 1 == n) ? hi : lo + (hi - lo) * t;
  }
  return out;
}

inline std::vector<double> geomspace(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > 0.0)) fail(ErrorKind::domain, "geomspace needs positive endpoints");
  std::vector<double> out = linspace(std::log(lo), std::log(hi), n);
  for (double& v : out) v = std::exp(v);
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// Grid on [lo, hi]; geometric when the range is positive and spans more
/// than a decade, uniform otherwise.
inline std::vector<double> auto_grid(double lo, double hi, std::size_t n) {
  if (lo > 0.0 && hi / lo > 10.0) return geomspace(lo, hi, n);
  return linspace(lo, hi, n);
}

/// Points approaching an endpoint: lo + (start - lo) * 10^{-k/per_decade}
/// (finite endpoint) or geometric growth toward +/- infinity.
inline std::vector<double> approach_grid(double endpoint, double start, std::size_t n,
                                         double decades = 6.0) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::pow(10.0, -decades * static_cast<double>(k + 1) / static_cast<double>(n));
    if (std::isfinite(endpoint)) {
      out[k] = endpoint + (start - endpoint) * s;
    } else {
      const double mag = std::max(std::abs(start), 1.0) / s;
      out[k] = endpoint > 0 ? mag : -mag;
    }
  }
  return out;
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// the input, not on how it was produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline Estimate estimate(std::span<const double> samples) {
  Estimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  e.mean = pairwise_sum(samples) / static_cast<double>(e.n);
  if (e.n > 1) {
    std::vector<double> sq(e.n);
    for (std::size_t i = 0; i < e.n; ++i) sq[i] = (samples[i] - e.mean) * (samples[i] - e.mean);
    const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
    e.se = std::sqrt(var / static_cast<double>(e.n));
  }
  return e;
}

/// Estimate of E[a - b] from paired samples.
inline Estimate paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::numeric, "paired samples differ in size");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return estimate(d);
}

inline std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return 0.0;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Fixed 7-point Gauss-Legendre rule on [a, b].
inline double gauss7(const RealFn& f, double a, double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss<double, 7>::integrate(f, a, b);
}

/// Adaptive Gauss-Kronrod 15/7; throws a numeric error naming the panel
/// when the integrand is not finite.
inline double integrate_adaptive(const RealFn& f, double a, double b, double rel_tol = 1e-12) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 12, rel_tol, &err);
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "quadrature failed on panel [" << a << ", " << b << "]";
    fail(ErrorKind::numeric, os.str());
  }
  return v;
}

/// Bisection for a sign change of f on [lo, hi].
inline double bisect(const RealFn& f, double lo, double hi, double rel_tol = 1e-12) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) fail(ErrorKind::numeric, "bisection bracket has no sign change");
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (std::abs(hi - lo) <= rel_tol * std::max(std::abs(mid), 1e-300)) break;
  }
  return 0.5 * (lo + hi);
}

inline double central_diff(const RealFn& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_diff2(const RealFn& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace refgame
