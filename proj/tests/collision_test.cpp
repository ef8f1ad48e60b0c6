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

#include <cmath>
#include <numeric>
#include <vector>

#include "sparse_ldp/collision.hpp"
#include "sparse_ldp/oracle.hpp"

namespace sparse_ldp {
namespace {

const double kLn2 = std::log(2.0);

// Reference law written straight from the output rule, independent of
// CollisionLaw: hit buckets get e^eps / Omega, the rest share what is left.
std::vector<double> reference_law(const TernaryVector& x, const SingleTable& table, double epsilon) {
  const std::uint32_t t = table.t;
  const double s = x.sparsity();
  const double omega = s * std::exp(epsilon) + t - s;
  std::vector<bool> hit(t, false);
  for (const auto& e : x.support()) hit[table.bucket({e.index, e.sign}) - 1] = true;
  const double k = static_cast<double>(std::count(hit.begin(), hit.end(), true));
  std::vector<double> law(t);
  for (std::uint32_t z = 0; z < t; ++z) {
    law[z] = hit[z] ? std::exp(epsilon) / omega : (1.0 - k * std::exp(epsilon) / omega) / (t - k);
  }
  return law;
}


TEST(CollisionLawTest, NoConflictExample) {
  const auto params = CollisionParams::make(6, 2, kLn2, 4);
  const TernaryVector x(6, {{1, Sign::kPlus}, {4, Sign::kMinus}});
  SingleTable table{4, std::vector<std::uint32_t>(12, 3)};
  table.buckets[EventId{1, Sign::kPlus}.code() - 1] = 1;
  table.buckets[EventId{4, Sign::kMinus}.code() - 1] = 2;
  const auto law = collision_law(x, table, params).dense();
  EXPECT_NEAR(law[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(law[1], 1.0 / 3, 1e-15);
  EXPECT_NEAR(law[2], 1.0 / 6, 1e-15);
  EXPECT_NEAR(law[3], 1.0 / 6, 1e-15);
}

TEST(CollisionLawTest, ConflictExample) {
  const auto params = CollisionParams::make(6, 2, kLn2, 4);
  const TernaryVector x(6, {{1, Sign::kPlus}, {4, Sign::kMinus}});
  SingleTable table{4, std::vector<std::uint32_t>(12, 3)};
  table.buckets[EventId{1, Sign::kPlus}.code() - 1] = 2;
  table.buckets[EventId{4, Sign::kMinus}.code() - 1] = 2;
  const auto law = collision_law(x, table, params);
  EXPECT_EQ(law.hit_buckets.size(), 1u);
  EXPECT_NEAR(law.probability(2), 1.0 / 3, 1e-15);
  for (const std::uint32_t z : {1u, 3u, 4u}) EXPECT_NEAR(law.probability(z), 2.0 / 9, 1e-15);
}

TEST(CollisionLawTest, NearZeroBudgetIsUniform) {
  const auto params = CollisionParams::make(6, 2, 1e-9, 4);
  const TernaryVector x(6, {{1, Sign::kPlus}, {4, Sign::kMinus}});
  SingleTable table{4, std::vector<std::uint32_t>(12, 1)};
  for (const double p : collision_law(x, table, params).dense()) EXPECT_NEAR(p, 0.25, 1e-8);
}

TEST(CollisionLawTest, MatchesReferenceAndNormalizesOnRandomTables) {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::uint32_t d = 1 + static_cast<std::uint32_t>(uniform_below(rng, 8));
    const std::uint32_t s = 1 + static_cast<std::uint32_t>(uniform_below(rng, d));
    const std::uint32_t t = s + 1 + static_cast<std::uint32_t>(uniform_below(rng, 10));
    const double eps = 0.05 + 3.0 * uniform01(rng);
    const auto params = CollisionParams::make(d, s, eps, t);
    SingleTable table{t, std::vector<std::uint32_t>(2 * d)};
    for (auto& b : table.buckets) b = 1 + static_cast<std::uint32_t>(uniform_below(rng, t));
    const auto x = all_inputs(d, s)[uniform_below(rng, all_inputs(d, s).size())];
    const auto law = collision_law(x, table, params).dense();
    const auto ref = reference_law(x, table, eps);
    double sum = 0.0;
    for (std::uint32_t z = 0; z < t; ++z) {
      ASSERT_NEAR(law[z], ref[z], 1e-14);
      ASSERT_GE(law[z], 1.0 / params.omega - 1e-15);
      ASSERT_LE(law[z], std::exp(eps) / params.omega + 1e-15);
      sum += law[z];
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(CollisionRandomizeTest, SamplerFollowsTheLaw) {
  const std::uint32_t d = 10;
  const std::uint32_t s = 3;
  const std::uint32_t t = 9;
  const auto params = CollisionParams::make(d, s, 1.0, t);
  const TernaryVector x(d, {{2, Sign::kPlus}, {5, Sign::kMinus}, {9, Sign::kPlus}});
  Rng rng = make_rng(21);
  // Scan a few user hashes so that both conflict-free and conflicting images appear.
  for (std::uint64_t user = 0; user < 6; ++user) {
    const auto hash = draw_user_hash(77, user, HashKind::kSingle, t);
    const auto law = collision_law(x, hash, params).dense();
    const int trials = 60000;
    std::vector<double> counts(t, 0.0);
    for (int k = 0; k < trials; ++k) {
      const auto view = collision_randomize(x, hash, params, rng);
      ASSERT_EQ(view.hash, hash);
      counts[view.z - 1] += 1;
    }
    for (std::uint32_t z = 0; z < t; ++z) {
      const double se = std::sqrt(law[z] * (1 - law[z]) / trials);
      EXPECT_NEAR(counts[z] / trials, law[z], 5 * se);
    }
  }
}

TEST(CollisionRandomizeTest, RejectsBadParameters) {
  EXPECT_THROW(CollisionParams::make(6, 2, 1.0, 2), ParameterError);
  EXPECT_THROW(CollisionParams::make(6, 2, 1.0, 1), ParameterError);
  const auto params = CollisionParams::make(6, 2, 1.0, 4);
  const TernaryVector x(6, {{1, Sign::kPlus}, {4, Sign::kMinus}});
  Rng rng = make_rng(1);
  EXPECT_THROW(collision_randomize(x, draw_user_hash(1, 1, HashKind::kSingle, 5), params, rng), ParameterError);
  EXPECT_THROW(collision_randomize(x, draw_user_hash(1, 1, HashKind::kPaired, 4), params, rng), ParameterError);
  const TernaryVector wrong(6, {{1, Sign::kPlus}});
  EXPECT_THROW(collision_randomize(wrong, draw_user_hash(1, 1, HashKind::kSingle, 4), params, rng), ParameterError);
}

TEST(CollisionOptimalTTest, Examples) {
  EXPECT_EQ(collision_optimal_t(4, 1.0), 17u);
  EXPECT_EQ(collision_optimal_t(1, kLn2), 3u);
  EXPECT_EQ(collision_optimal_t(8, 0.5), 28u);
  EXPECT_EQ(collision_optimal_t(1, 1e-6), 2u);
  EXPECT_THROW(collision_optimal_t(0, 1.0), ParameterError);
  EXPECT_THROW(collision_optimal_t(1, 0.0), ParameterError);
}

TEST(CollisionEstimatorTest, ExampleValuesAndIdentities) {
  const auto params = CollisionParams::make(6, 2, kLn2, 4);
  const double hit = collision_indicator_estimate(true, params);
  const double miss = collision_indicator_estimate(false, params);
  EXPECT_NEAR(hit, 9.0, 1e-12);
  EXPECT_NEAR(miss, -3.0, 1e-12);
  EXPECT_NEAR(hit / 3 + 2 * miss / 3, 1.0, 1e-12);
  EXPECT_NEAR(hit / 4 + 3 * miss / 4, 0.0, 1e-12);

  const auto hash = draw_user_hash(5, 5, HashKind::kSingle, 4);
  const EventId e{3, Sign::kPlus};
  EXPECT_NEAR(collision_indicator_estimate(PrivateView{hash, hash.bucket(e)}, e, params), 9.0, 1e-12);
  EXPECT_NEAR(collision_indicator_estimate(PrivateView{hash, hash.bucket(e) % 4 + 1}, e, params), -3.0, 1e-12);
  EXPECT_THROW(collision_indicator_estimate(PrivateView{hash, 5}, e, params), ParameterError);
}

TEST(CollisionEstimatorTest, ZeroBudgetIsDegenerate) {
  const auto params = CollisionParams::make(6, 2, 0.0, 4);
  EXPECT_THROW(collision_indicator_estimate(true, params), ParameterError);
}

TEST(CollisionVarianceTest, SummedVarianceIsConvexInT) {
  for (const std::uint32_t s : {1u, 2u, 4u, 8u, 16u}) {
    for (const double eps : {0.1, 0.5, 1.0, 2.0, 3.0}) {
      const std::uint32_t d = 256;
      const double step = 0.25;
      for (double t = s + 2 * step; t + step <= d; t += step) {
        const double curvature = collision_summed_variance(d, s, eps, t - step) -
                                 2 * collision_summed_variance(d, s, eps, t) +
                                 collision_summed_variance(d, s, eps, t + step);
        ASSERT_GE(curvature, -1e-9 * collision_summed_variance(d, s, eps, t)) << "s=" << s << " eps=" << eps << " t=" << t;
      }
    }
  }
}

TEST(CollisionVarianceTest, OptimalTIsNearTheRealMinimizer) {
  for (const std::uint32_t s : {1u, 4u, 8u}) {
    for (const double eps : {0.5, 1.0, 2.0}) {
      const std::uint32_t d = 512;
      double best_t = s + 1.0;
      for (double t = s + 1.0; t <= d; t += 0.01) {
        if (collision_summed_variance(d, s, eps, t) < collision_summed_variance(d, s, eps, best_t)) best_t = t;
      }
      EXPECT_NEAR(collision_optimal_t(s, eps), best_t, 0.15 * best_t + 1.0);
    }
  }
}

}  // namespace
}  // namespace sparse_ldp
