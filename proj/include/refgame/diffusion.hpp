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
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "refgame/checks.hpp"
#include "refgame/errors.hpp"
#include "refgame/numerics.hpp"

namespace refgame {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class BoundaryType { natural, entrance_not_exit };
enum class GeneratorVariant { controlled, stopping };

inline const char* to_string(BoundaryType b) {
  return b == BoundaryType::natural ? "natural" : "entrance_not_exit";
}

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double x) const { return x > lo && x < hi; }
};

/// mu(x) = m0 + m1 x, sigma(x) = s0 + s1 x; lets simulation loops avoid
/// calls through std::function.
struct AffineCoefficients {
  bool valid = false;
  double m0 = 0.0, m1 = 0.0, s0 = 0.0, s1 = 0.0;
};

/// Time-homogeneous diffusion dX = mu dt + sigma dW on an open interval,
/// discounted at rate r. The stopping-game process has drift mu + sigma sigma'.
struct DiffusionModel {
  std::string family = "custom";
  RealFn mu, sigma, mu_prime, sigma_prime;
  Interval interval;
  double r = 0.0;
  BoundaryType lower = BoundaryType::natural;
  BoundaryType upper = BoundaryType::natural;
  AffineCoefficients affine;

  double stopping_drift(double x) const { return mu(x) + sigma(x) * sigma_prime(x); }
  double killing_rate(double x) const { return r - mu_prime(x); }

  /// Drift and volatility of the controlled (stopping = false) or stopping process.
  struct Coefs {
    double drift, vol, kill;
  };
  Coefs coefs(double x, bool stopping) const {
    if (affine.valid) {
      const double s = affine.s0 + affine.s1 * x;
      const double d = affine.m0 + affine.m1 * x + (stopping ? s * affine.s1 : 0.0);
      return {d, s, r - affine.m1};
    }
    const double s = sigma(x);
    return {stopping ? mu(x) + s * sigma_prime(x) : mu(x), s, r - mu_prime(x)};
  }

  void require_inside(double x) const {
    if (!interval.contains(x)) {
      std::ostringstream os;
      os << "x = " << x << " outside state interval (" << interval.lo << ", " << interval.hi << ")";
      fail(ErrorKind::domain, os.str());
    }
  }
};

/// A function with its first two derivatives.
struct SmoothFn {
  RealFn f, df, d2f;
};

inline double generator_at(const DiffusionModel& m, const SmoothFn& f, double x,
                           GeneratorVariant v) {
  m.require_inside(x);
  const double s = m.sigma(x);
  const double drift = v == GeneratorVariant::controlled ? m.mu(x) : m.stopping_drift(x);
  return 0.5 * s * s * f.d2f(x) + drift * f.df(x);
}

inline RealFn generator_apply(const DiffusionModel& m, const SmoothFn& f, GeneratorVariant v) {
  return [m, f, v](double x) { return generator_at(m, f, x, v); };
}

/// Checks the model invariants on a grid: sigma > 0, r - mu' > 0 and the
/// supplied derivatives against central differences.
inline ConditionReport model_checks(const DiffusionModel& m, const std::vector<double>& grid) {
  ConditionReport rep;
  CheckItem pos{"sigma_positive", Status::pass, "", {}};
  CheckItem kill{"discount_positive", Status::pass, "", {}};
  CheckItem der{"derivatives_consistent", Status::pass, "", {}};
  if (!(m.r > 0.0)) {
    kill.status = Status::fail;
    kill.detail = "discount rate r must be positive";
  }
  double min_sigma = kInf, min_kill = kInf, worst_der = 0.0, worst_at = 0.0;
  for (double x : grid) {
    if (!m.interval.contains(x)) continue;
    min_sigma = std::min(min_sigma, m.sigma(x));
    min_kill = std::min(min_kill, m.killing_rate(x));
    const double h = 1e-5 * std::max(std::abs(x), 1.0);
    if (!m.interval.contains(x - h) || !m.interval.contains(x + h)) continue;
    const double fd_mu = central_diff(m.mu, x, h);
    const double fd_sig = central_diff(m.sigma, x, h);
    const double e1 = std::abs(fd_mu - m.mu_prime(x)) / std::max(std::abs(m.mu_prime(x)), 1.0);
    const double e2 = std::abs(fd_sig - m.sigma_prime(x)) / std::max(std::abs(m.sigma_prime(x)), 1.0);
    if (std::max(e1, e2) > worst_der) {
      worst_der = std::max(e1, e2);
      worst_at = x;
    }
  }
  pos.evidence = {{"min_sigma", min_sigma}};
  if (!(min_sigma > 0.0)) {
    pos.status = Status::fail;
    pos.detail = "sigma must be positive on the grid";
  }
  kill.evidence = {{"min_r_minus_mu_prime", min_kill}};
  if (!(min_kill > 0.0)) {
    kill.status = Status::fail;
    kill.detail = "r - mu' must be positive on the grid";
  }
  der.evidence = {{"max_rel_error", worst_der}, {"at", worst_at}};
  if (!(worst_der <= 1e-6)) {
    der.status = Status::fail;
    der.detail = "mu_prime / sigma_prime disagree with finite differences";
  }
  rep.add(pos);
  rep.add(kill);
  rep.add(der);
  return rep;
}

inline void validate_model(const DiffusionModel& m, const std::vector<double>& grid) {
  const auto rep = model_checks(m, grid);
  for (const auto& item : rep.items) {
    if (item.status != Status::fail) continue;
    const ErrorKind k = item.name == "derivatives_consistent" ? ErrorKind::config : ErrorKind::assumption;
    std::ostringstream os;
    os << item.detail;
    for (const auto& [key, v] : item.evidence) os << " (" << key << " = " << v << ")";
    fail(k, os.str());
  }
}

/// Scale density of the stopping-game process, S'(anchor) = 1.
inline RealFn scale_density(const DiffusionModel& m, double anchor) {
  m.require_inside(anchor);
  RealFn integrand = [m](double z) {
    const double s = m.sigma(z);
    return 2.0 * m.stopping_drift(z) / (s * s);
  };
  return [m, anchor, integrand](double x) {
    m.require_inside(x);
    const double lo = std::min(anchor, x), hi = std::max(anchor, x);
    double integral;
    try {
      integral = integrate_adaptive(integrand, lo, hi, 1e-13);
    } catch (const Error&) {
      std::ostringstream os;
      os << "scale density integrand not integrable between " << anchor << " and " << x;
      fail(ErrorKind::numeric, os.str());
    }
    if (x < anchor) integral = -integral;
    const double v = std::exp(-integral);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "scale density not finite at x = " << x;
      fail(ErrorKind::numeric, os.str());
    }
    return v;
  };
}

inline DiffusionModel gbm_model(double mu_hat, double sigma_hat, double r) {
  DiffusionModel m;
  m.family = "gbm";
  m.mu = [mu_hat](double x) { return mu_hat * x; };
  m.sigma = [sigma_hat](double x) { return sigma_hat * x; };
  m.mu_prime = [mu_hat](double) { return mu_hat; };
  m.sigma_prime = [sigma_hat](double) { return sigma_hat; };
  m.interval = {0.0, kInf};
  m.r = r;
  m.affine = {true, 0.0, mu_hat, 0.0, sigma_hat};
  return m;
}

inline DiffusionModel brownian_model(double mu, double sigma, double r) {
  DiffusionModel m;
  m.family = "brownian";
  m.mu = [mu](double) { return mu; };
  m.sigma = [sigma](double) { return sigma; };
  m.mu_prime = [](double) { return 0.0; };
  m.sigma_prime = [](double) { return 0.0; };
  m.r = r;
  m.affine = {true, mu, 0.0, sigma, 0.0};
  return m;
}

/// Ornstein-Uhlenbeck: dX = theta (mean - X) dt + sigma dW.
inline DiffusionModel ou_model(double theta, double mean, double sigma, double r) {
  DiffusionModel m;
  m.family = "ou";
  m.mu = [theta, mean](double x) { return theta * (mean - x); };
  m.sigma = [sigma](double) { return sigma; };
  m.mu_prime = [theta](double) { return -theta; };
  m.sigma_prime = [](double) { return 0.0; };
  m.r = r;
  m.affine = {true, theta * mean, -theta, sigma, 0.0};
  return m;
}

/// Coefficients tabulated on a uniform grid and interpolated by cubic
/// B-splines; the state interval is the open table range.
inline DiffusionModel table_model(double x0, double dx, std::vector<double> mu_vals,
                                  std::vector<double> sigma_vals, double r,
                                  BoundaryType lower = BoundaryType::natural,
                                  BoundaryType upper = BoundaryType::natural) {
  if (mu_vals.size() != sigma_vals.size() || mu_vals.size() < 4 || !(dx > 0.0))
    fail(ErrorKind::config, "custom-table needs >= 4 equally spaced mu/sigma samples");
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  const double x_end = x0 + dx * static_cast<double>(mu_vals.size() - 1);
  auto smu = std::make_shared<Spline>(mu_vals.begin(), mu_vals.end(), x0, dx);
  auto ssig = std::make_shared<Spline>(sigma_vals.begin(), sigma_vals.end(), x0, dx);
  DiffusionModel m;
  m.family = "custom-table";
  m.mu = [smu](double x) { return (*smu)(x); };
  m.sigma = [ssig](double x) { return (*ssig)(x); };
  m.mu_prime = [smu](double x) { return smu->prime(x); };
  m.sigma_prime = [ssig](double x) { return ssig->prime(x); };
  m.interval = {x0, x_end};
  m.r = r;
  m.lower = lower;
  m.upper = upper;
  return m;
}

}  // namespace refgame
