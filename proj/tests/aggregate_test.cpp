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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sparse_ldp/aggregate.hpp"
#include "sparse_ldp/experiment.hpp"

namespace sparse_ldp {
namespace {

std::vector<PrivateView> randomize_all(std::span<const TernaryVector> data, MechanismKind mech,
                                       const MechanismParams& params, std::uint64_t seed,
                                       std::uint64_t hash_pool = 0) {
  Rng rng = make_rng(seed);
  std::vector<PrivateView> views;
  views.reserve(data.size());
  const HashKind kind = mech == MechanismKind::kCollision ? HashKind::kSingle : HashKind::kPaired;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint64_t index = hash_pool > 0 ? i % hash_pool : i;
    const UserHash hash = draw_user_hash(seed, index, kind, params.t);
    if (mech == MechanismKind::kCollision) {
      views.push_back(collision_randomize(data[i], hash, CollisionParams::make(params), rng));
    } else {
      views.push_back(coco_randomize(data[i], hash, params, rng));
    }
  }
  return views;
}

TEST(CountEventHitsTest, StreamingAndBucketedAgreeBitwise) {
  const auto data = gen_synthetic(5000, 12, 3, 7);
  for (const auto mech : {MechanismKind::kCollision, MechanismKind::kCoco}) {
    MechanismParams params{12, 3, 1.0, mech == MechanismKind::kCollision ? 9u : 10u};
    for (const std::uint64_t pool : {0ull, 40ull}) {
      const auto views = randomize_all(data, mech, params, 11, pool);
      const auto streaming = aggregate_frequencies(views, mech, params, AggregationPath::kStreaming);
      const auto bucketed = aggregate_frequencies(views, mech, params, AggregationPath::kBucketed);
      EXPECT_EQ(streaming.values, bucketed.values);
      EXPECT_EQ(streaming.n, bucketed.n);
    }
  }
}

TEST(CountEventHitsTest, MergingSplitsIsExact) {
  const auto data = gen_synthetic(600, 8, 2, 3);
  MechanismParams params{8, 2, 1.0, 6};
  const auto views = randomize_all(data, MechanismKind::kCollision, params, 5);
  const std::span<const PrivateView> all(views);
  auto left = count_event_hits(all.first(250), 8, 6, HashKind::kSingle);
  left += count_event_hits(all.subspan(250), 8, 6, HashKind::kSingle);
  const auto whole = count_event_hits(all, 8, 6, HashKind::kSingle);
  EXPECT_EQ(left.hits, whole.hits);
  EXPECT_EQ(left.n, whole.n);
}

TEST(CountEventHitsTest, RejectsMismatchedViews) {
  const auto data = gen_synthetic(10, 4, 1, 3);
  MechanismParams params{4, 1, 1.0, 4};
  const auto views = randomize_all(data, MechanismKind::kCollision, params, 5);
  EXPECT_THROW(count_event_hits(views, 4, 5, HashKind::kSingle), ParameterError);
  EXPECT_THROW(count_event_hits(views, 4, 4, HashKind::kPaired), ParameterError);
  EXPECT_THROW(count_event_hits({}, 4, 4, HashKind::kSingle), ParameterError);
  EXPECT_THROW(aggregate_frequencies(views, MechanismKind::kCoco, params), ParameterError);
}

// Joint enumeration of every output combination for a few users with fixed
// hashes, compared with the per-user conditional expectation of the estimator.
TEST(AggregateTest, CollisionExpectationByJointEnumeration) {
  const std::uint32_t d = 3, s = 1, t = 4;
  const auto params = CollisionParams::make(d, s, 1.0, t);
  const auto data = gen_synthetic(3, d, s, 17);
  std::vector<UserHash> hashes;
  std::vector<CollisionLaw> laws;
  for (std::uint64_t i = 0; i < data.size(); ++i) {
    hashes.push_back(draw_user_hash(23, i, HashKind::kSingle, t));
    laws.push_back(collision_law(data[i], hashes.back(), params));
  }
  std::vector<long double> expected(2 * d, 0.0L);
  for (std::uint32_t z0 = 1; z0 <= t; ++z0) {
    for (std::uint32_t z1 = 1; z1 <= t; ++z1) {
      for (std::uint32_t z2 = 1; z2 <= t; ++z2) {
        const std::vector<PrivateView> views{{hashes[0], z0}, {hashes[1], z1}, {hashes[2], z2}};
        const long double p = static_cast<long double>(laws[0].probability(z0)) * laws[1].probability(z1) *
                              laws[2].probability(z2);
        const auto est = aggregate_frequencies(views, MechanismKind::kCollision, params.base);
        for (std::size_t k = 0; k < expected.size(); ++k) expected[k] += p * est.values[k];
      }
    }
  }
  const double hit = std::exp(1.0) / params.omega;
  for (std::uint32_t code = 1; code <= 2 * d; ++code) {
    const EventId e = EventId::from_code(code);
    double conditional = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double p_hit = laws[i].probability(hashes[i].bucket(e));
      conditional += (p_hit - 1.0 / t) / (hit - 1.0 / t);
    }
    EXPECT_NEAR(static_cast<double>(expected[code - 1]), conditional / 3.0, 1e-12);
  }
}

TEST(AggregateTest, CocoExpectationByJointEnumeration) {
  const MechanismParams params{3, 1, 1.0, 4};
  const auto data = gen_synthetic(2, 3, 1, 19);
  const auto rates = collision_rates(1, 1.0, 4);
  std::vector<UserHash> hashes;
  std::vector<std::vector<double>> laws;
  for (std::uint64_t i = 0; i < data.size(); ++i) {
    hashes.push_back(draw_user_hash(29, i, HashKind::kPaired, 4));
    laws.push_back(coco_law(data[i], hashes.back(), params));
  }
  std::vector<long double> mean(3, 0.0L), nonmissing(3, 0.0L);
  for (std::uint32_t z0 = 1; z0 <= 4; ++z0) {
    for (std::uint32_t z1 = 1; z1 <= 4; ++z1) {
      const std::vector<PrivateView> views{{hashes[0], z0}, {hashes[1], z1}};
      const long double p = static_cast<long double>(laws[0][z0 - 1]) * laws[1][z1 - 1];
      const auto counts = count_event_hits(views, 3, 4, HashKind::kPaired);
      const auto est = coco_estimates(counts, params);
      for (std::size_t j = 0; j < 3; ++j) {
        mean[j] += p * est.mean[j];
        nonmissing[j] += p * (*est.nonmissing)[j];
      }
    }
  }
  for (std::uint32_t j = 1; j <= 3; ++j) {
    double m = 0, nm = 0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double plus = laws[i][hashes[i].bucket({j, Sign::kPlus}) - 1];
      const double minus = laws[i][hashes[i].bucket({j, Sign::kMinus}) - 1];
      m += (plus - minus) / (rates.p_t - rates.p_o);
      nm += (plus + minus - 2 * rates.p_f) / (rates.p_t + rates.p_o - 2 * rates.p_f);
    }
    EXPECT_NEAR(static_cast<double>(mean[j - 1]), m / 2, 1e-12);
    EXPECT_NEAR(static_cast<double>(nonmissing[j - 1]), nm / 2, 1e-12);
  }
}

TEST(AggregateTest, CollisionIsUnbiasedOverHashes) {
  const std::uint32_t d = 4, s = 2;
  const MechanismParams params{d, s, 1.0, collision_optimal_t(s, 1.0)};
  const auto data = gen_synthetic(50, d, s, 31);
  const auto truth = true_frequencies(data);
  const int reps = 4000;
  std::vector<double> sum(2 * d, 0), sum_sq(2 * d, 0);
  for (int r = 0; r < reps; ++r) {
    const auto views = randomize_all(data, MechanismKind::kCollision, params, 1000 + r);
    const auto est = aggregate_frequencies(views, MechanismKind::kCollision, params);
    for (std::size_t k = 0; k < sum.size(); ++k) {
      sum[k] += est.values[k];
      sum_sq[k] += est.values[k] * est.values[k];
    }
  }
  for (std::size_t k = 0; k < sum.size(); ++k) {
    const double mean = sum[k] / reps;
    const double sd = std::sqrt((sum_sq[k] / reps - mean * mean) / reps);
    EXPECT_NEAR(mean, truth[k], 5 * sd) << "event code " << k + 1;
  }
}

TEST(AggregateTest, CocoConvergesAtHighBudget) {
  const MechanismParams params{6, 1, 8.0, coco_choose_t(1, 8.0, CocoTarget::kMean)};
  const auto data = gen_synthetic(20000, 6, 1, 37);
  const auto views = randomize_all(data, MechanismKind::kCoco, params, 41);
  const auto est = aggregate_frequencies(views, MechanismKind::kCoco, params);
  EXPECT_LT(tve(est.values, true_frequencies(data)), 0.05);
}

// Projection by enumerating every candidate active set.
std::vector<double> brute_force_projection(const std::vector<double>& v, double total) {
  const std::size_t d = v.size();
  std::vector<double> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    double sum = 0;
    int size = 0;
    for (std::size_t k = 0; k < d; ++k) {
      if (mask >> k & 1) {
        sum += v[k];
        ++size;
      }
    }
    const double shift = (sum - total) / size;
    std::vector<double> w(d, 0.0);
    bool feasible = true;
    for (std::size_t k = 0; k < d; ++k) {
      if (mask >> k & 1) {
        w[k] = v[k] - shift;
        feasible = feasible && w[k] >= -1e-12;
      }
    }
    if (!feasible) continue;
    double distance = 0;
    for (std::size_t k = 0; k < d; ++k) distance += (w[k] - v[k]) * (w[k] - v[k]);
    if (distance < best_distance) {
      best_distance = distance;
      best = w;
    }
  }
  return best;
}

double l2(std::span<const double> a, std::span<const double> b) {
  double sum = 0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sum);
}

TEST(ProjectionTest, WorkedExample) {
  const std::vector<double> v{0.8, 0.4};
  const auto w = project_onto_scaled_simplex(v, 1.0);
  EXPECT_NEAR(w[0], 0.7, 1e-15);
  EXPECT_NEAR(w[1], 0.3, 1e-15);
}

TEST(ProjectionTest, AllNegativeInputLandsOnTheSimplex) {
  const std::vector<double> v{-3.0, -1.0, -2.0, -1.0};
  const auto w = project_onto_scaled_simplex(v, 2.0);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 2.0, 1e-12);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_EQ(w[2], 0.0);
  EXPECT_NEAR(w[1], 1.0, 1e-12);
  EXPECT_NEAR(w[3], 1.0, 1e-12);
}

TEST(ProjectionTest, MatchesBruteForceAndIsIdempotent) {
  Rng rng = make_rng(43);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + uniform_below(rng, 6);
    const double total = 1.0 + static_cast<double>(uniform_below(rng, d));
    std::vector<double> v(d);
    for (auto& x : v) x = 4.0 * uniform01(rng) - 1.5;
    const auto w = project_onto_scaled_simplex(v, total);
    const auto expected = brute_force_projection(v, total);
    for (std::size_t k = 0; k < d; ++k) {
      EXPECT_NEAR(w[k], expected[k], 1e-10);
      EXPECT_GE(w[k], 0.0);
    }
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), total, 1e-10);
    const auto again = project_onto_scaled_simplex(w, total);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(again[k], w[k], 1e-12);
  }
}

// Projection onto a convex set never moves an estimate further from any
// point of the set in Euclidean distance. The L1 analogue does not hold.
TEST(ProjectionTest, EuclideanNonExpansiveTowardsSimplexPoints) {
  Rng rng = make_rng(47);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 2 + uniform_below(rng, 7);
    const double total = 1.0 + static_cast<double>(uniform_below(rng, d));
    std::vector<double> x(d);
    for (auto& e : x) e = uniform01(rng);
    x = project_onto_scaled_simplex(x, total);
    std::vector<double> v(d);
    for (std::size_t k = 0; k < d; ++k) v[k] = x[k] + 2.0 * uniform01(rng) - 1.0;
    EXPECT_LE(l2(project_onto_scaled_simplex(v, total), x), l2(v, x) + 1e-12);
  }
}

TEST(ProjectionTest, L1CanExpand) {
  const std::vector<double> x{1.0, 0.0, 0.0};
  const std::vector<double> v{-0.5, 0.0, 0.0};
  const auto w = project_onto_scaled_simplex(v, 1.0);
  EXPECT_NEAR(tve(w, x), 2.0, 1e-15);
  EXPECT_NEAR(tve(v, x), 1.5, 1e-15);
}

TEST(ProjectionTest, RejectsBadArguments) {
  EXPECT_THROW(project_onto_scaled_simplex(std::vector<double>{1.0}, 0.0), ParameterError);
  EXPECT_THROW(project_onto_scaled_simplex(std::vector<double>{}, 1.0), ParameterError);
}

TEST(MetricTest, WorkedExamples) {
  const std::vector<double> estimate{0.5, 0.2, -0.1};
  const std::vector<double> truth{0.4, 0.4, 0.0};
  EXPECT_NEAR(tve(estimate, truth), 0.4, 1e-15);
  EXPECT_NEAR(mae(estimate, truth), 0.2, 1e-15);
  EXPECT_EQ(tve(truth, truth), 0.0);
  EXPECT_THROW(tve(estimate, std::vector<double>{1.0}), ParameterError);
  EXPECT_THROW(mae(estimate, std::vector<double>{1.0}), ParameterError);
}

TEST(MeanEstimateTest, FrequencyIdentitiesAreBitwise) {
  const FrequencyEstimate f{{0.25, 0.5, -0.125, 0.375, 0.0, 0.0}, 10};
  const auto m = MeanEstimate::from_frequency(f);
  for (std::uint32_t j = 1; j <= 3; ++j) {
    EXPECT_EQ(m.mean[j - 1], f.at({j, Sign::kPlus}) - f.at({j, Sign::kMinus}));
    EXPECT_EQ((*m.nonmissing)[j - 1], f.at({j, Sign::kPlus}) + f.at({j, Sign::kMinus}));
  }
  const auto back = coco_frequencies(m, 10);
  EXPECT_EQ(back.values, f.values);
}

TEST(MeanEstimateTest, TrueMeans) {
  const std::vector<TernaryVector> data{TernaryVector::from_dense(std::vector<int>{1, 0, -1}),
                                        TernaryVector::from_dense(std::vector<int>{1, -1, 0})};
  const auto freq = true_frequencies(data);
  EXPECT_EQ(freq, (std::vector<double>{0.0, 1.0, 0.5, 0.0, 0.5, 0.0}));
  const auto means = true_means(data);
  EXPECT_EQ(means.mean, (std::vector<double>{1.0, -0.5, -0.5}));
  EXPECT_EQ(*means.nonmissing, (std::vector<double>{1.0, 0.5, 0.5}));
}

TEST(MeanEstimateTest, ConditionalMeansGuardSmallSupport) {
  const MeanEstimate m{{0.2, 0.001, -0.3}, std::vector<double>{0.4, 0.005, 0.3}};
  const auto c = conditional_means(m, 100);
  ASSERT_TRUE(c[0].has_value());
  EXPECT_NEAR(*c[0], 0.5, 1e-15);
  EXPECT_FALSE(c[1].has_value());
  EXPECT_NEAR(*c[2], -1.0, 1e-15);
  EXPECT_THROW(conditional_means(MeanEstimate{{0.1}, std::nullopt}, 10), ParameterError);
}

}  // namespace
}  // namespace sparse_ldp
