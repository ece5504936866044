// Copyright 2026 The DPGAN Authors.
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

// Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//
// Per-step RDP at order alpha is (1/(alpha-1)) log A_alpha, where A_alpha is
// the moment of the privacy-loss ratio of the mixture (1-q) N(0, s^2) + q
// N(1, s^2) against N(0, s^2). Integer orders use the finite binomial
// expansion; fractional orders use the convergent two-sided series with
// erfc tails (Mironov, Talwar & Zhang, 2019). Everything is in log space.
//
// RDP composes additively over steps and is converted to (epsilon, delta)
// with the hypothesis-testing bound of Balle et al. (2020):
//   eps = T rdp(a) + log((a-1)/a) - (log delta + log a) / (a - 1),
// minimized over the order grid.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "dpgan/error.hpp"

namespace dpgan {

namespace accounting_internal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (lo == kNegInf) return hi;
  return std::log1p(std::exp(lo - hi)) + hi;
}

// log(exp(a) - exp(b)); nullopt when the difference would be negative.
inline std::optional<double> log_sub(double a, double b) {
  if (a < b) return std::nullopt;
  if (b == kNegInf) return a;
  if (a == b) return kNegInf;
  const double d = a - b;
  if (d > 700.0) return a;
  return std::log(std::expm1(d)) + b;
}

// log(erfc(x)), accurate in the far right tail where erfc underflows.
inline double log_erfc(double x) {
  if (x < 20.0) return std::log(std::erfc(x));
  const double inv2 = 1.0 / (x * x);
  // Asymptotic series 1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6) + 105/(16x^8).
  const double series =
      1.0 + inv2 * (-0.5 + inv2 * (0.75 + inv2 * (-1.875 + inv2 * 6.5625)));
  return -x * x - std::log(x) - 0.5 * std::log(std::numbers::pi) + std::log(series);
}

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double log_a_integer(double q, double sigma, int alpha) {
  double log_a = kNegInf;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  for (int k = 0; k <= alpha; ++k) {
    const double term = log_binomial(alpha, k) + k * log_q +
                        (alpha - k) * log_1mq +
                        (double(k) * k - k) / (2.0 * sigma * sigma);
    log_a = log_add(log_a, term);
  }
  return log_a;
}

inline std::optional<double> log_a_fractional(double q, double sigma,
                                              double alpha) {
  double log_a0 = kNegInf;
  double log_a1 = kNegInf;
  const double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  // Generalized binomial coefficient C(alpha, i), tracked as log|c| and sign.
  double log_coef = 0.0;
  bool positive = true;
  for (int i = 0;; ++i) {
    if (i > 0) {
      const double factor = (alpha - i + 1.0) / i;
      if (factor == 0.0) break;
      log_coef += std::log(std::fabs(factor));
      if (factor < 0.0) positive = !positive;
    }
    const double j = alpha - i;
    const double log_t0 = log_coef + i * log_q + j * log_1mq;
    const double log_t1 = log_coef + j * log_q + i * log_1mq;
    const double log_e0 =
        std::log(0.5) + log_erfc((i - z0) / (std::sqrt(2.0) * sigma));
    const double log_e1 =
        std::log(0.5) + log_erfc((z0 - j) / (std::sqrt(2.0) * sigma));
    const double log_s0 =
        log_t0 + (double(i) * i - i) / (2.0 * sigma * sigma) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2.0 * sigma * sigma) + log_e1;
    if (positive) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      auto a0 = log_sub(log_a0, log_s0);
      auto a1 = log_sub(log_a1, log_s1);
      if (!a0 || !a1) return std::nullopt;
      log_a0 = *a0;
      log_a1 = *a1;
    }
    if (std::max(log_s0, log_s1) < -30.0) break;
    if (i > 100000) return std::nullopt;
  }
  return log_add(log_a0, log_a1);
}

}  // namespace accounting_internal

// Per-step RDP of the subsampled Gaussian mechanism at order alpha > 1.
// Returns +infinity when the order is unavailable (overflow or a failed
// series); callers drop such orders.
inline double rdp_subsampled_gaussian(double q, double sigma, double alpha) {
  namespace ai = accounting_internal;
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must lie in (0, 1]");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(alpha > 1.0)) throw ConfigError("RDP order must exceed 1");
  const double inf = std::numeric_limits<double>::infinity();
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  double log_a;
  if (alpha == std::floor(alpha) && alpha < 1e6) {
    log_a = ai::log_a_integer(q, sigma, static_cast<int>(alpha));
  } else {
    auto r = ai::log_a_fractional(q, sigma, alpha);
    if (!r) return inf;
    log_a = *r;
  }
  const double eps = log_a / (alpha - 1.0);
  if (!std::isfinite(eps)) return inf;
  return std::max(eps, 0.0);
}

// {1.1, 1.2, ..., 10.9} union {2, ..., 128} union {160, 192, 224, 256}.
inline std::vector<double> default_orders() {
  std::vector<double> orders;
  for (int x = 1; x < 100; ++x) orders.push_back(1.0 + x / 10.0);
  for (int a = 2; a <= 128; ++a) orders.push_back(a);
  for (int a : {160, 192, 224, 256}) orders.push_back(a);
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  return orders;
}

struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> eps_per_step;
};

// Orders with unavailable (non-finite) RDP are dropped.
inline RdpCurve rdp_curve(double q, double sigma,
                          const std::vector<double>& orders = default_orders()) {
  RdpCurve c;
  for (double a : orders) {
    const double e = rdp_subsampled_gaussian(q, sigma, a);
    if (std::isfinite(e)) {
      c.orders.push_back(a);
      c.eps_per_step.push_back(e);
    }
  }
  return c;
}

struct EpsilonResult {
  double epsilon = 0.0;
  double order = std::numeric_limits<double>::quiet_NaN();
};

// (epsilon, delta) after T compositions of the curve's mechanism.
inline EpsilonResult epsilon_from_curve(const RdpCurve& curve, std::int64_t T,
                                        double delta) {
  if (T < 0) throw ConfigError("step count must be non-negative");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta in (0, 1)");
  if (T == 0) return {0.0, std::numeric_limits<double>::quiet_NaN()};
  if (curve.orders.empty()) throw AccountingError("no usable RDP orders");
  EpsilonResult best{std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::quiet_NaN()};
  const double log_delta = std::log(delta);
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double a = curve.orders[i];
    const double eps = static_cast<double>(T) * curve.eps_per_step[i] +
                       std::log((a - 1.0) / a) -
                       (log_delta + std::log(a)) / (a - 1.0);
    if (eps < best.epsilon) best = {eps, a};
  }
  if (!std::isfinite(best.epsilon)) {
    throw AccountingError("epsilon is infinite at every order");
  }
  best.epsilon = std::max(best.epsilon, 0.0);
  return best;
}

struct BudgetQuery {
  std::int64_t T = 0;
  double q = 1.0;
  double sigma = 1.0;
  double delta = 1e-5;
};

inline EpsilonResult epsilon_after(const BudgetQuery& query,
                                   const std::vector<double>& orders =
                                       default_orders()) {
  if (query.T == 0) return {};
  return epsilon_from_curve(rdp_curve(query.q, query.sigma, orders), query.T,
                            query.delta);
}

// Largest T with epsilon_after(T) <= eps_target.
inline std::int64_t max_steps(double q, double sigma, double delta,
                              double eps_target) {
  if (!(eps_target > 0.0)) throw ConfigError("target epsilon must be positive");
  const RdpCurve curve = rdp_curve(q, sigma);
  auto ok = [&](std::int64_t T) {
    return epsilon_from_curve(curve, T, delta).epsilon <= eps_target;
  };
  if (!ok(1)) {
    throw CalibrationError("target epsilon is exceeded by a single step");
  }
  constexpr std::int64_t kCap = std::int64_t{1} << 52;
  std::int64_t lo = 1;
  std::int64_t hi = 2;
  while (ok(hi)) {
    lo = hi;
    if (hi >= kCap) return hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

inline constexpr double kSigmaResolution = 1e-3;
inline constexpr double kSigmaMax = 1e4;

// Smallest sigma on the grid {k * 1e-3} with epsilon_after <= eps_target.
inline double calibrate_sigma(double q, std::int64_t T, double delta,
                              double eps_target) {
  if (!(eps_target > 0.0)) throw ConfigError("target epsilon must be positive");
  if (T < 1) throw ConfigError("calibration needs T >= 1");
  auto ok = [&](std::int64_t k) {
    return epsilon_after({T, q, k * kSigmaResolution, delta}).epsilon <=
           eps_target;
  };
  std::int64_t hi = static_cast<std::int64_t>(kSigmaMax / kSigmaResolution);
  if (!ok(hi)) {
    throw CalibrationError("no sigma <= 1e4 meets the target epsilon");
  }
  std::int64_t lo = 0;  // sigma = 0 never satisfies a finite budget
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi * kSigmaResolution;
}

}  // namespace dpgan
