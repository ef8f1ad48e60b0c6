// Copyright 2026 The sparse_ldp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Privacy amplification by shuffling for randomizers with the mixture
// property: each user's output law under x decomposes as
//   R_x = e^eps * alpha * Q_1 + alpha * Q_1' + (1 - alpha - e^eps * alpha) * Q_*
// relative to a neighbouring input x'. The shuffled batch of n such outputs
// is then dominated by the pair
//   P = (A + D1, C - A + D2),  Q = (A + D2, C - A + D1)
// with C ~ Bin(n - 1, 2 alpha), A ~ Bin(C, 1/2) and (D1, D2) equal to (1, 0),
// (0, 1), (0, 0) with probabilities e^eps alpha, alpha, 1 - alpha - e^eps alpha.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "sparse_ldp/error.hpp"

namespace sparse_ldp {

// Mixture weight of the Collision/CoCo randomizers: s / (s e^eps + t - s).
inline double collision_alpha(std::uint32_t s, double epsilon, std::uint32_t t) {
  detail::require(s >= 1, "s must be positive");
  detail::require(t > s, "collision_alpha requires t > s");
  detail::require(std::isfinite(epsilon) && epsilon >= 0, "epsilon must be non-negative");
  return s / (s * std::exp(epsilon) + t - static_cast<double>(s));
}

// Worst-case total variation between two Collision output laws,
// s (e^eps - 1) / (s e^eps + t - s). Equals (e^eps - 1) * collision_alpha.
inline double collision_total_variation(std::uint32_t s, double epsilon, std::uint32_t t) {
  return std::expm1(epsilon) * collision_alpha(s, epsilon, t);
}

// Mixture weight any eps-LDP randomizer admits: 1 / (e^eps + 1).
inline double generic_clone_alpha(double epsilon) {
  detail::require(std::isfinite(epsilon) && epsilon >= 0, "epsilon must be non-negative");
  return 1.0 / (std::exp(epsilon) + 1.0);
}

// (e^eps - 1) / (e^eps + 1), the total variation bound of eps-LDP.
inline double generic_clone_total_variation(double epsilon) {
  return std::expm1(epsilon) * generic_clone_alpha(epsilon);
}

struct AmplificationQuery {
  std::uint64_t n = 1;
  double epsilon = 1.0;
  double alpha = 0.0;
  double delta = 1e-6;

  void validate() const {
    detail::require(n >= 1, "batch size must be positive");
    detail::require(std::isfinite(epsilon) && epsilon > 0, "epsilon must be positive");
    detail::require(std::isfinite(alpha) && alpha >= 0, "alpha must be non-negative");
    detail::require(alpha * (std::exp(epsilon) + 1.0) <= 1.0 + 1e-12,
                    "alpha too large: (e^eps + 1) alpha must not exceed 1");
    detail::require(delta > 0 && delta < 1, "delta must lie in (0, 1)");
  }
};

struct DivergenceResult {
  double delta_forward = 0;
  double delta_backward = 0;
  double truncation_mass = 0;

  double delta() const { return std::max(delta_forward, delta_backward) + truncation_mass; }
};

namespace detail {

inline double log_binomial_pmf(std::uint64_t trials, std::uint64_t k, double log_p, double log_q) {
  const double n = static_cast<double>(trials);
  const double kk = static_cast<double>(k);
  return std::lgamma(n + 1) - std::lgamma(kk + 1) - std::lgamma(n - kk + 1) + kk * log_p + (n - kk) * log_q;
}

// Binomial pmf restricted to a window [lo, lo + pmf.size()) holding all but at
// most `tail` of the mass. Small supports are kept whole.
struct BinomialWindow {
  std::uint64_t lo = 0;
  std::vector<double> pmf;
  bool complete = true;

  double at(std::int64_t k) const {
    if (k < static_cast<std::int64_t>(lo)) return 0.0;
    const auto i = static_cast<std::uint64_t>(k) - lo;
    return i < pmf.size() ? pmf[i] : 0.0;
  }
};

inline BinomialWindow binomial_window(std::uint64_t trials, double p, double tail) {
  BinomialWindow w;
  if (p <= 0.0 || trials == 0) {
    w.pmf = {1.0};
    return w;
  }
  if (p >= 1.0) {
    w.lo = trials;
    w.pmf = {1.0};
    return w;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  if (trials < 64) {
    w.pmf.resize(trials + 1);
    for (std::uint64_t k = 0; k <= trials; ++k) w.pmf[k] = std::exp(log_binomial_pmf(trials, k, log_p, log_q));
    return w;
  }
  // Grow outward from the mode using the ratio recurrence, always taking the
  // heavier side, until the retained mass reaches 1 - tail.
  const auto mode = std::min<std::uint64_t>(trials, static_cast<std::uint64_t>((trials + 1) * p));
  // lgamma loses about 1e-9 of relative accuracy near 1e6 trials, enough to
  // keep the window from ever reaching 1 - tail.
  const double mode_pmf = boost::math::pdf(
      boost::math::binomial_distribution<double>(static_cast<double>(trials), p), static_cast<double>(mode));
  const double odds = p / (1.0 - p);
  std::vector<double> left;  // mode-1, mode-2, ...
  std::vector<double> right{mode_pmf};
  std::uint64_t lo = mode;
  std::uint64_t hi = mode;
  double next_left = lo > 0 ? mode_pmf * static_cast<double>(lo) / (static_cast<double>(trials - lo + 1) * odds) : 0;
  double next_right = hi < trials ? mode_pmf * static_cast<double>(trials - hi) * odds / static_cast<double>(hi + 1) : 0;
  double mass = mode_pmf;
  while (mass < 1.0 - tail && (lo > 0 || hi < trials)) {
    if (hi < trials && (lo == 0 || next_right >= next_left)) {
      ++hi;
      right.push_back(next_right);
      mass += next_right;
      next_right = hi < trials ? next_right * static_cast<double>(trials - hi) * odds / static_cast<double>(hi + 1) : 0;
    } else {
      --lo;
      left.push_back(next_left);
      mass += next_left;
      next_left = lo > 0 ? next_left * static_cast<double>(lo) / (static_cast<double>(trials - lo + 1) * odds) : 0;
    }
  }
  w.lo = lo;
  w.complete = lo == 0 && hi == trials;
  w.pmf.assign(left.rbegin(), left.rend());
  w.pmf.insert(w.pmf.end(), right.begin(), right.end());
  return w;
}

}  // namespace detail

// One outcome (u, v) of the dominating pair with its P and Q probabilities.
struct PairOutcome {
  std::uint64_t u = 0;
  std::uint64_t v = 0;
  double p = 0;
  double q = 0;
};

// Visits the outcomes of (P, Q) inside the truncation windows. Returns the
// windows' completeness. Outcome probabilities use
//   P(u, m) = b(u; m) [g B(m) + B(m - 1) (2/m) (e^eps alpha u + alpha (m - u))]
// where m = u + v, B is the Bin(n - 1, 2 alpha) pmf, b the Bin(m, 1/2) pmf
// and g = 1 - alpha - e^eps alpha; Q swaps the roles of u and m - u.
template <typename Visitor>
bool visit_pair_outcomes(const AmplificationQuery& query, double tail, Visitor&& visit) {
  query.validate();
  const double e_eps = std::exp(query.epsilon);
  const double a = query.alpha;
  const double g = std::max(0.0, 1.0 - a - e_eps * a);
  const auto counts = detail::binomial_window(query.n - 1, std::min(1.0, 2.0 * a), tail);
  bool complete = counts.complete;
  const std::uint64_t m_lo = counts.lo;
  const std::uint64_t m_hi = counts.lo + counts.pmf.size();  // inclusive: D adds one
  for (std::uint64_t m = m_lo; m <= m_hi; ++m) {
    const double b_m = counts.at(static_cast<std::int64_t>(m));
    const double b_m1 = counts.at(static_cast<std::int64_t>(m) - 1);
    if (b_m == 0.0 && b_m1 == 0.0) continue;
    const auto split = detail::binomial_window(m, 0.5, tail);
    complete = complete && split.complete;
    for (std::size_t i = 0; i < split.pmf.size(); ++i) {
      const std::uint64_t u = split.lo + i;
      const double base = split.pmf[i];
      double p = g * b_m;
      double q = g * b_m;
      if (m > 0) {
        const double scale = b_m1 * 2.0 / static_cast<double>(m);
        const double up = static_cast<double>(u);
        const double down = static_cast<double>(m - u);
        p += scale * (e_eps * a * up + a * down);
        q += scale * (a * up + e_eps * a * down);
      }
      visit(PairOutcome{u, m - u, base * p, base * q});
    }
  }
  return complete;
}

// Every outcome of (P, Q); intended for small n.
inline std::vector<PairOutcome> pq_outcomes(std::uint64_t n, double epsilon, double alpha) {
  std::vector<PairOutcome> out;
  visit_pair_outcomes(AmplificationQuery{n, epsilon, alpha, 0.5}, 0.0,
                      [&](const PairOutcome& o) { out.push_back(o); });
  return out;
}

// Hockey-stick divergences D_{e^eps_c}(P || Q) and D_{e^eps_c}(Q || P).
inline DivergenceResult pq_divergence(const AmplificationQuery& query, double epsilon_c) {
  detail::require(std::isfinite(epsilon_c) && epsilon_c >= 0, "epsilon_c must be non-negative");
  const double factor = std::exp(epsilon_c);
  long double forward = 0;
  long double backward = 0;
  long double p_mass = 0;
  long double q_mass = 0;
  const bool complete = visit_pair_outcomes(query, query.delta * 1e-3, [&](const PairOutcome& o) {
    forward += std::max(0.0, o.p - factor * o.q);
    backward += std::max(0.0, o.q - factor * o.p);
    p_mass += o.p;
    q_mass += o.q;
  });
  DivergenceResult result{static_cast<double>(forward), static_cast<double>(backward), 0.0};
  if (!complete) {
    result.truncation_mass = static_cast<double>(std::max({0.0L, 1.0L - p_mass, 1.0L - q_mass}));
  }
  return result;
}

// Smallest eps_c in [0, epsilon], up to `tolerance`, whose reported delta does
// not exceed `delta`.
inline double amplified_epsilon(std::uint64_t n, double epsilon, double alpha, double delta,
                                double tolerance = 1e-4) {
  detail::require(tolerance > 0, "tolerance must be positive");
  const AmplificationQuery query{n, epsilon, alpha, delta};
  query.validate();
  const auto ok = [&](double eps_c) { return pq_divergence(query, eps_c).delta() <= delta; };
  if (ok(0.0)) return 0.0;
  if (!ok(epsilon)) return epsilon;
  double lo = 0.0;
  double hi = epsilon;
  for (int iter = 0; iter < 64 && hi - lo > tolerance; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// Closed-form amplification bound of Erlingsson et al.: eps sqrt(144 ln(1/delta) / n).
// The bound carries validity conditions on (eps, n) that are not checked here.
inline double efmrtt_closed_form(double epsilon, double delta, std::uint64_t n) {
  detail::require(n >= 1, "n must be positive");
  detail::require(delta > 0 && delta < 1, "delta must lie in (0, 1)");
  return epsilon * std::sqrt(144.0 * std::log(1.0 / delta) / static_cast<double>(n));
}

}  // namespace sparse_ldp
