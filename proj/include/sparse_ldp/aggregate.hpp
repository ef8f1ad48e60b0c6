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

// Server-side aggregation of private views, simplex projection and error
// metrics.
//
// Both Collision and CoCo estimators only depend on how many users' outputs
// hit each event's bucket, so aggregation first reduces the views to integer
// hit counts per event code. The streaming path evaluates every view's hash
// directly; the bucketed path groups identical (hash, z) views first. Both
// produce the same integer counts and hence bitwise-identical estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "sparse_ldp/coco.hpp"
#include "sparse_ldp/collision.hpp"
#include "sparse_ldp/error.hpp"
#include "sparse_ldp/mechanism.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

enum class MechanismKind : std::uint8_t { kCollision, kCoco };
enum class AggregationPath : std::uint8_t { kStreaming, kBucketed };

// Per-event hit counts, indexed by event code - 1.
struct EventCounts {
  std::vector<std::uint64_t> hits;
  std::uint64_t n = 0;

  EventCounts& operator+=(const EventCounts& other) {
    detail::require(hits.size() == other.hits.size(), "cannot merge counts over different domains");
    for (std::size_t k = 0; k < hits.size(); ++k) hits[k] += other.hits[k];
    n += other.n;
    return *this;
  }
};

namespace detail {
inline void check_view(const PrivateView& view, std::uint32_t t, HashKind kind) {
  require(view.hash.range() == t, "view range does not match t");
  require(view.hash.kind() == kind, "view hash kind does not match the mechanism");
  require(view.z >= 1 && view.z <= t, "view output outside [t]");
}

inline void add_view(const PrivateView& view, std::uint32_t d, std::uint64_t multiplicity, EventCounts& counts) {
  for (std::uint32_t code = 1; code <= 2 * d; ++code) {
    if (view.hash.bucket(EventId::from_code(code)) == view.z) counts.hits[code - 1] += multiplicity;
  }
}
}  // namespace detail

inline EventCounts count_event_hits(std::span<const PrivateView> views, std::uint32_t d, std::uint32_t t,
                                    HashKind kind, AggregationPath path = AggregationPath::kStreaming) {
  detail::require(!views.empty(), "no views to aggregate");
  EventCounts counts{std::vector<std::uint64_t>(2 * d, 0), views.size()};
  if (path == AggregationPath::kStreaming) {
    for (const auto& v : views) {
      detail::check_view(v, t, kind);
      detail::add_view(v, d, 1, counts);
    }
    return counts;
  }
  std::map<std::pair<std::uint64_t, std::uint32_t>, std::uint64_t> groups;
  for (const auto& v : views) {
    detail::check_view(v, t, kind);
    ++groups[{v.hash.seed(), v.z}];
  }
  for (const auto& [key, multiplicity] : groups) {
    detail::add_view(PrivateView{UserHash(key.first, kind, t), key.second}, d, multiplicity, counts);
  }
  return counts;
}

struct FrequencyEstimate {
  std::vector<double> values;  // values[code - 1] estimates f(event)
  std::uint64_t n = 0;

  double at(EventId e) const { return values.at(e.code() - 1); }
  std::uint32_t dimension() const { return static_cast<std::uint32_t>(values.size() / 2); }
};

struct MeanEstimate {
  std::vector<double> mean;                       // mean[j - 1] estimates (1/n) sum_i x_ij
  std::optional<std::vector<double>> nonmissing;  // estimates (1/n) sum_i |x_ij|

  static MeanEstimate from_frequency(const FrequencyEstimate& f) {
    const std::uint32_t d = f.dimension();
    MeanEstimate out{std::vector<double>(d), std::vector<double>(d)};
    for (std::uint32_t j = 1; j <= d; ++j) {
      const double plus = f.at({j, Sign::kPlus});
      const double minus = f.at({j, Sign::kMinus});
      out.mean[j - 1] = plus - minus;
      (*out.nonmissing)[j - 1] = plus + minus;
    }
    return out;
  }
};

inline FrequencyEstimate collision_frequencies(const EventCounts& counts, const CollisionParams& params) {
  detail::require(counts.n > 0, "no views to aggregate");
  detail::require(counts.hits.size() == 2 * params.base.d, "counts do not match d");
  const double scale = collision_estimator_scale(params);
  const double n = static_cast<double>(counts.n);
  FrequencyEstimate out{std::vector<double>(counts.hits.size()), counts.n};
  for (std::size_t k = 0; k < counts.hits.size(); ++k) {
    out.values[k] = (static_cast<double>(counts.hits[k]) / n - params.false_probability()) / scale;
  }
  return out;
}

// Direct CoCo mean and non-missing estimates, averaged over users.
inline MeanEstimate coco_estimates(const EventCounts& counts, const MechanismParams& params) {
  detail::require(counts.n > 0, "no views to aggregate");
  detail::require(counts.hits.size() == 2 * params.d, "counts do not match d");
  const auto rates = collision_rates(params.s, params.epsilon, params.t);
  const double mean_scale = coco_mean_scale(rates);
  const double nonmissing_scale = coco_nonmissing_scale(rates);
  const double n = static_cast<double>(counts.n);
  MeanEstimate out{std::vector<double>(params.d), std::vector<double>(params.d)};
  for (std::uint32_t j = 1; j <= params.d; ++j) {
    const double plus = static_cast<double>(counts.hits[EventId{j, Sign::kPlus}.code() - 1]);
    const double minus = static_cast<double>(counts.hits[EventId{j, Sign::kMinus}.code() - 1]);
    out.mean[j - 1] = (plus - minus) / n / mean_scale;
    (*out.nonmissing)[j - 1] = ((plus + minus) / n - 2.0 * rates.p_f) / nonmissing_scale;
  }
  return out;
}

// f(j+/-) = (non-missing +/- mean) / 2.
inline FrequencyEstimate coco_frequencies(const MeanEstimate& estimates, std::uint64_t n) {
  detail::require(estimates.nonmissing.has_value(), "non-missing estimates are required");
  const auto d = static_cast<std::uint32_t>(estimates.mean.size());
  FrequencyEstimate out{std::vector<double>(2 * d), n};
  for (std::uint32_t j = 1; j <= d; ++j) {
    const double nm = (*estimates.nonmissing)[j - 1];
    const double mean = estimates.mean[j - 1];
    out.values[EventId{j, Sign::kPlus}.code() - 1] = 0.5 * (nm + mean);
    out.values[EventId{j, Sign::kMinus}.code() - 1] = 0.5 * (nm - mean);
  }
  return out;
}

inline FrequencyEstimate aggregate_frequencies(std::span<const PrivateView> views, MechanismKind mechanism,
                                               const MechanismParams& params,
                                               AggregationPath path = AggregationPath::kStreaming) {
  params.validate();
  if (mechanism == MechanismKind::kCollision) {
    const auto cp = CollisionParams::make(params);
    return collision_frequencies(count_event_hits(views, params.d, params.t, HashKind::kSingle, path), cp);
  }
  validate_coco(params);
  const auto counts = count_event_hits(views, params.d, params.t, HashKind::kPaired, path);
  return coco_frequencies(coco_estimates(counts, params), counts.n);
}

// Euclidean projection of v onto {w >= 0, sum w = total}.
inline std::vector<double> project_onto_scaled_simplex(std::span<const double> v, double total) {
  detail::require(total > 0, "simplex total must be positive");
  detail::require(!v.empty(), "cannot project an empty vector");
  std::vector<double> u(v.size());
  std::transform(v.begin(), v.end(), u.begin(), [&](double x) { return x / total; });
  std::vector<double> sorted = u;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0) threshold = candidate;
  }
  for (auto& x : u) x = std::max(x - threshold, 0.0) * total;
  return u;
}

inline FrequencyEstimate project_to_simplex(const FrequencyEstimate& estimate, std::uint32_t s) {
  detail::require(s >= 1, "s must be positive");
  return FrequencyEstimate{project_onto_scaled_simplex(estimate.values, static_cast<double>(s)), estimate.n};
}

inline double tve(std::span<const double> estimate, std::span<const double> truth) {
  detail::require(estimate.size() == truth.size(), "length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < estimate.size(); ++k) sum += std::fabs(estimate[k] - truth[k]);
  return sum;
}

inline double mae(std::span<const double> estimate, std::span<const double> truth) {
  detail::require(estimate.size() == truth.size(), "length mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < estimate.size(); ++k) worst = std::max(worst, std::fabs(estimate[k] - truth[k]));
  return worst;
}

// Empirical event frequencies (1/n) sum_i [e in Y_{x_i}], indexed code - 1.
inline std::vector<double> true_frequencies(std::span<const TernaryVector> data) {
  detail::require(!data.empty(), "empty dataset");
  const std::uint32_t d = data.front().dimension();
  std::vector<std::uint64_t> counts(2 * d, 0);
  for (const auto& x : data) {
    detail::require(x.dimension() == d, "dataset mixes dimensions");
    for (const auto& e : x.support()) ++counts[EventId{e.index, e.sign}.code() - 1];
  }
  std::vector<double> out(2 * d);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<double>(counts[k]) / data.size();
  return out;
}

inline MeanEstimate true_means(std::span<const TernaryVector> data) {
  return MeanEstimate::from_frequency(FrequencyEstimate{true_frequencies(data), data.size()});
}

// x_bar_j / x_underbar_j, left empty where the non-missing frequency is below 1/n.
inline std::vector<std::optional<double>> conditional_means(const MeanEstimate& estimate, std::uint64_t n) {
  detail::require(estimate.nonmissing.has_value(), "non-missing estimates are required");
  detail::require(n >= 1, "n must be positive");
  std::vector<std::optional<double>> out(estimate.mean.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double present = (*estimate.nonmissing)[j];
    if (present >= 1.0 / static_cast<double>(n)) out[j] = estimate.mean[j] / present;
  }
  return out;
}

}  // namespace sparse_ldp
