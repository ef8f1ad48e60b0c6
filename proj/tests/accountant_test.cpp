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

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <map>
#include <utility>

#include "sparse_ldp/accountant.hpp"
#include "sparse_ldp/collision.hpp"
#include "sparse_ldp/rng.hpp"

namespace sparse_ldp {
namespace {

const double kLn2 = std::log(2.0);

long double choose(int n, int k) {
  long double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

long double binom_pmf(int n, int k, long double p) {
  return choose(n, k) * std::pow(p, k) * std::pow(1 - p, n - k);
}

// Direct enumeration of C, A and the (D1, D2) draw.
std::pair<double, double> brute_force_divergence(int n, double eps, double alpha, double eps_c) {
  const long double e = std::exp(static_cast<long double>(eps));
  const long double a = alpha;
  const std::pair<std::pair<int, int>, long double> deltas[] = {
      {{1, 0}, e * a}, {{0, 1}, a}, {{0, 0}, 1 - a - e * a}};
  std::map<std::pair<int, int>, long double> p, q;
  for (int c = 0; c <= n - 1; ++c) {
    const long double pc = binom_pmf(n - 1, c, 2 * a);
    for (int k = 0; k <= c; ++k) {
      const long double pa = binom_pmf(c, k, 0.5L);
      for (const auto& [d, pd] : deltas) {
        p[{k + d.first, c - k + d.second}] += pc * pa * pd;
        q[{k + d.second, c - k + d.first}] += pc * pa * pd;
      }
    }
  }
  const long double f = std::exp(static_cast<long double>(eps_c));
  long double forward = 0, backward = 0;
  for (const auto& [key, pv] : p) {
    const long double qv = q[key];
    forward += std::max(0.0L, pv - f * qv);
    backward += std::max(0.0L, qv - f * pv);
  }
  for (const auto& [key, qv] : q) {
    if (!p.count(key)) backward += qv;
  }
  return {static_cast<double>(forward), static_cast<double>(backward)};
}

TEST(AlphaTest, CollisionWeightAndTotalVariation) {
  EXPECT_NEAR(collision_alpha(1, kLn2, 4), 0.2, 1e-15);
  EXPECT_NEAR(collision_total_variation(1, kLn2, 4), 0.2, 1e-15);
  EXPECT_NEAR(collision_total_variation(4, 1.0, 17), 0.28790, 5e-6);
  EXPECT_NEAR(collision_alpha(4, 1.0, 17), 4.0 / (4 * std::exp(1.0) + 13), 1e-15);
  EXPECT_LT(collision_alpha(4, 1.0, 1u << 30), 1e-8);
  EXPECT_THROW(collision_alpha(4, 1.0, 4), ParameterError);
  for (std::uint32_t s = 1; s <= 16; ++s) {
    for (const double eps : {0.1, 1.0, 3.0}) {
      for (std::uint32_t t = 2 * s; t <= 6 * s; ++t) {
        EXPECT_LE(collision_alpha(s, eps, t) * (std::exp(eps) + 1), 1.0 + 1e-12);
        EXPECT_LE(collision_alpha(s, eps, t), generic_clone_alpha(eps) + 1e-15);
      }
    }
  }
}

TEST(AlphaTest, GenericClone) {
  EXPECT_NEAR(generic_clone_total_variation(std::log(3.0)), 0.5, 1e-15);
  EXPECT_NEAR(generic_clone_total_variation(kLn2), 1.0 / 3, 1e-15);
  EXPECT_NEAR(generic_clone_alpha(std::log(3.0)), 0.25, 1e-15);
  EXPECT_NEAR(generic_clone_alpha(kLn2), 1.0 / 3, 1e-15);
  EXPECT_NEAR(generic_clone_total_variation(1e-9), 0.0, 1e-9);
}

TEST(PqDivergenceTest, SingleUserHandValues) {
  const AmplificationQuery query{1, kLn2, 1.0 / 3, 1e-6};
  const auto zero = pq_divergence(query, 0.0);
  EXPECT_NEAR(zero.delta(), 1.0 / 3, 1e-15);
  EXPECT_EQ(zero.truncation_mass, 0.0);
  EXPECT_NEAR(pq_divergence(query, kLn2).delta(), 0.0, 1e-16);
}

TEST(PqDivergenceTest, MatchesBruteForceEnumeration) {
  Rng rng = make_rng(101);
  for (int n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 30; ++trial) {
      const double eps = 0.05 + 3.0 * uniform01(rng);
      const double alpha = uniform01(rng) / (std::exp(eps) + 1);
      const double eps_c = eps * uniform01(rng);
      const auto engine = pq_divergence(AmplificationQuery{static_cast<std::uint64_t>(n), eps, alpha, 1e-6}, eps_c);
      const auto [forward, backward] = brute_force_divergence(n, eps, alpha, eps_c);
      EXPECT_NEAR(engine.delta_forward, forward, 1e-12);
      EXPECT_NEAR(engine.delta_backward, backward, 1e-12);
      EXPECT_NEAR(engine.delta_forward, engine.delta_backward, 1e-12);
      EXPECT_EQ(engine.truncation_mass, 0.0);
    }
  }
}

TEST(PqDivergenceTest, SaturatesAtTheLocalBudget) {
  for (std::uint64_t n = 1; n <= 4; ++n) {
    for (const double eps : {0.3, 1.0, 2.5}) {
      const double alpha = generic_clone_alpha(eps);
      EXPECT_LE(pq_divergence(AmplificationQuery{n, eps, alpha, 1e-6}, eps).delta(), 1e-15);
    }
  }
}

TEST(PqDivergenceTest, MonotoneInTheTargetBudget) {
  for (const std::uint64_t n : {10ull, 1000ull, 100000ull}) {
    const AmplificationQuery query{n, 1.5, collision_alpha(4, 1.5, collision_optimal_t(4, 1.5)), 1e-6};
    double previous = 2.0;
    for (int k = 0; k <= 60; ++k) {
      const double delta = pq_divergence(query, 1.5 * k / 60).delta();
      EXPECT_LE(delta, previous + 1e-15);
      previous = delta;
    }
  }
}

TEST(PqDivergenceTest, TruncationStaysBelowDelta) {
  const auto start = std::chrono::steady_clock::now();
  for (const std::uint64_t n : {100000ull, 1000000ull}) {
    const AmplificationQuery query{n, 1.0, generic_clone_alpha(1.0), 1e-8};
    const auto r = pq_divergence(query, 0.01);
    EXPECT_GE(r.truncation_mass, 0.0);
    EXPECT_LE(r.truncation_mass, 1e-8 * 5e-3);
    EXPECT_TRUE(std::isfinite(r.delta()));
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 20.0);
}

TEST(PqDivergenceTest, RejectsInvalidWeights) {
  EXPECT_THROW(pq_divergence(AmplificationQuery{5, 1.0, 0.3, 1e-6}, 0.0), ParameterError);
  EXPECT_THROW(pq_divergence(AmplificationQuery{5, 1.0, -0.1, 1e-6}, 0.0), ParameterError);
  EXPECT_THROW(pq_divergence(AmplificationQuery{5, 1.0, 0.1, 1.0}, 0.0), ParameterError);
  EXPECT_THROW(pq_divergence(AmplificationQuery{0, 1.0, 0.1, 1e-6}, 0.0), ParameterError);
  EXPECT_THROW(pq_divergence(AmplificationQuery{5, 1.0, 0.1, 1e-6}, -1.0), ParameterError);
}

TEST(AmplifiedEpsilonTest, SingleUserGetsNoAmplification) {
  for (const double eps : {0.5, 1.0, 2.0}) {
    EXPECT_EQ(amplified_epsilon(1, eps, generic_clone_alpha(eps), 1e-6), eps);
  }
}

TEST(AmplifiedEpsilonTest, MonotoneInBatchSizeAndWeight) {
  const double eps = 1.0, delta = 1e-6;
  const double alpha = collision_alpha(4, eps, collision_optimal_t(4, eps));
  double previous = eps + 1;
  for (const std::uint64_t n : {100ull, 1000ull, 10000ull}) {
    const double e = amplified_epsilon(n, eps, alpha, delta);
    EXPECT_LE(e, previous);
    previous = e;
  }
  previous = 0.0;
  for (const double fraction : {0.1, 0.3, 0.6, 1.0}) {
    const double e = amplified_epsilon(5000, eps, fraction * generic_clone_alpha(eps), delta);
    EXPECT_GE(e, previous - 1e-4);
    previous = e;
  }
}

TEST(AmplifiedEpsilonTest, VacuousDeltaGivesZero) {
  EXPECT_EQ(amplified_epsilon(1000, 1.0, generic_clone_alpha(1.0), 1 - 1e-12), 0.0);
}

TEST(AmplifiedEpsilonTest, TightnessOrderingOnGrid) {
  for (const std::uint64_t n : {1000ull, 10000ull}) {
    for (const std::uint32_t s : {1u, 4u}) {
      for (const double eps : {0.5, 1.0, 2.0}) {
        const double delta = 1e-6;
        const double tight = amplified_epsilon(n, eps, collision_alpha(s, eps, collision_optimal_t(s, eps)), delta);
        const double generic = amplified_epsilon(n, eps, generic_clone_alpha(eps), delta);
        EXPECT_LE(tight, generic + 1e-4);
        EXPECT_LE(generic, efmrtt_closed_form(eps, delta, n));
      }
    }
  }
}

TEST(EfmrttTest, ClosedForm) {
  EXPECT_NEAR(efmrtt_closed_form(1.0, 1e-6, 100000), 0.14105, 5e-6);
  EXPECT_NEAR(efmrtt_closed_form(2.0, 1e-6, 100000), 2 * efmrtt_closed_form(1.0, 1e-6, 100000), 1e-15);
  EXPECT_LT(efmrtt_closed_form(1.0, 1e-6, 1ull << 62), 1e-6);
  EXPECT_THROW(efmrtt_closed_form(1.0, 0.0, 10), ParameterError);
}

}  // namespace
}  // namespace sparse_ldp
