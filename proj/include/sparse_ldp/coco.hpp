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

// CoCo: the correlated Collision randomizer and its per-user estimators.
//
// Buckets come in pairs {k, k + t/2}. Each non-zero entry x_j = b claims the
// pair indexed by H1(j): weight e^eps on the bucket H(j_b) picked by
// b * H2(j), weight 1 on its partner. Entries are processed in a uniformly
// random order and later entries overwrite earlier ones sharing a pair. All
// unclaimed buckets share the residual weight that brings the total to
// Omega = (e^eps + 1) s + t - 2s.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "sparse_ldp/error.hpp"
#include "sparse_ldp/hash.hpp"
#include "sparse_ldp/mechanism.hpp"
#include "sparse_ldp/rng.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

enum class CocoTarget : std::uint8_t { kMean, kNonmissing };

inline void validate_coco(const MechanismParams& params) {
  params.validate();
  detail::require(params.t % 2 == 0, "CoCo requires an even t");
  detail::require(params.t >= 2 * params.s + 2, "CoCo requires t >= 2s + 2");
}

inline double coco_omega(std::uint32_t s, double epsilon, std::uint32_t t) {
  return (std::exp(epsilon) + 1.0) * s + t - 2.0 * s;
}

struct CocoWeights {
  std::vector<double> w;  // w[k - 1] is the relative weight of bucket k
  double omega = 0;
};

// One claimed bucket pair after overwrites.
struct CocoClaim {
  std::uint32_t pair = 0;   // H1(j), in 1..t/2
  std::uint32_t heavy = 0;  // bucket carrying weight e^eps
};

// Final claims for a given processing order; sorted by pair.
template <PairedHashFunction H>
std::vector<CocoClaim> coco_claims(std::span<const SupportEntry> order, const H& hash) {
  std::vector<CocoClaim> claims;
  claims.reserve(order.size());
  for (const auto& e : order) {
    const std::uint32_t pair = hash.h1(e.index);
    const std::uint32_t heavy = paired_bucket(hash, EventId{e.index, e.sign});
    auto it = std::find_if(claims.begin(), claims.end(), [&](const CocoClaim& c) { return c.pair == pair; });
    if (it == claims.end()) {
      claims.push_back({pair, heavy});
    } else {
      it->heavy = heavy;
    }
  }
  std::sort(claims.begin(), claims.end(), [](const CocoClaim& a, const CocoClaim& b) { return a.pair < b.pair; });
  return claims;
}

inline double coco_residual_weight(const MechanismParams& params, std::size_t claimed_pairs) {
  const double e_eps = std::exp(params.epsilon);
  const double m = static_cast<double>(claimed_pairs);
  return (coco_omega(params.s, params.epsilon, params.t) - m * (e_eps + 1.0)) / (params.t - 2.0 * m);
}

// Weight vector produced by one processing order.
template <PairedHashFunction H>
CocoWeights coco_weights(std::span<const SupportEntry> order, const H& hash, const MechanismParams& params) {
  validate_coco(params);
  detail::require(hash.range() == params.t, "hash range does not match t");
  const auto claims = coco_claims(order, hash);
  const double e_eps = std::exp(params.epsilon);
  CocoWeights out{std::vector<double>(params.t, coco_residual_weight(params, claims.size())),
                  coco_omega(params.s, params.epsilon, params.t)};
  for (const auto& c : claims) {
    out.w[c.heavy - 1] = e_eps;
    out.w[paired_partner(c.pair, params.t, c.heavy) - 1] = 1.0;
  }
  return out;
}

// Output law given the hash, averaged over the random processing order.
// Within a group of entries sharing a pair the surviving entry is uniform,
// and the group winners are independent, so the average is closed form.
template <PairedHashFunction H>
std::vector<double> coco_law(const TernaryVector& x, const H& hash, const MechanismParams& params) {
  validate_coco(params);
  params.check_input(x);
  detail::require(hash.range() == params.t, "hash range does not match t");
  const double e_eps = std::exp(params.epsilon);
  const double omega = coco_omega(params.s, params.epsilon, params.t);
  std::map<std::uint32_t, std::vector<std::uint32_t>> groups;  // pair -> heavy buckets
  for (const auto& e : x.support()) {
    groups[hash.h1(e.index)].push_back(paired_bucket(hash, EventId{e.index, e.sign}));
  }
  const double w = coco_residual_weight(params, groups.size());
  std::vector<double> law(params.t, w / omega);
  for (const auto& [pair, heavies] : groups) {
    const std::uint32_t low = pair;
    const std::uint32_t high = pair + params.t / 2;
    double low_weight = 0;
    for (const auto h : heavies) low_weight += (h == low) ? e_eps : 1.0;
    low_weight /= static_cast<double>(heavies.size());
    law[low - 1] = low_weight / omega;
    law[high - 1] = (e_eps + 1.0 - low_weight) / omega;
  }
  return law;
}

template <PairedHashFunction H>
std::uint32_t coco_sample(std::span<const SupportEntry> order, const H& hash, const MechanismParams& params,
                          Rng& rng) {
  const auto claims = coco_claims(order, hash);
  const double e_eps = std::exp(params.epsilon);
  const double omega = coco_omega(params.s, params.epsilon, params.t);
  const double w = coco_residual_weight(params, claims.size());
  assert(w >= 1.0 - 1e-12 && w <= e_eps + 1e-12);
  const auto m = static_cast<std::uint32_t>(claims.size());
  const std::uint32_t half = params.t / 2;
  const double pair_mass = (e_eps + 1.0) / omega;
  const double u = uniform01(rng);
  if (u < m * pair_mass) {
    const auto slot = std::min<std::uint32_t>(m - 1, static_cast<std::uint32_t>(u / pair_mass));
    const double within = u - slot * pair_mass;
    const auto& c = claims[slot];
    return within < e_eps / omega ? c.heavy : paired_partner(c.pair, params.t, c.heavy);
  }
  const std::uint32_t free_pairs = half - m;
  auto rank = static_cast<std::uint32_t>((u - m * pair_mass) / (w / omega));
  rank = std::min(rank, 2 * free_pairs - 1);
  const bool upper = rank >= free_pairs;
  std::uint32_t pair = rank % free_pairs + 1;
  for (const auto& c : claims) {
    if (c.pair <= pair) ++pair;
  }
  return upper ? pair + half : pair;
}

inline PrivateView coco_randomize(const TernaryVector& x, const UserHash& hash, const MechanismParams& params,
                                  Rng& rng) {
  validate_coco(params);
  params.check_input(x);
  detail::require(hash.kind() == HashKind::kPaired, "CoCo needs a paired hash");
  detail::require(hash.range() == params.t, "hash range does not match t");
  std::vector<SupportEntry> order(x.support().begin(), x.support().end());
  shuffle(std::span<SupportEntry>(order), rng);
  return PrivateView{hash, coco_sample(std::span<const SupportEntry>(order), hash, params, rng)};
}

struct CollisionRates {
  double p_t = 0;
  double p_f = 0;
  double p_o = 0;
  double p_ow = 0;
  std::uint32_t t = 0;
};

inline double coco_overwrite_probability(std::uint32_t s, std::uint32_t t) {
  const double ratio = static_cast<double>(t) / (2.0 * s);
  return 1.0 - ratio * (1.0 - std::pow((t - 2.0) / t, static_cast<double>(s)));
}

inline CollisionRates collision_rates(std::uint32_t s, double epsilon, std::uint32_t t) {
  detail::require(s >= 1, "s must be positive");
  detail::require(std::isfinite(epsilon) && epsilon >= 0, "epsilon must be non-negative");
  detail::require(t % 2 == 0 && t >= 2 * s + 2, "rates need an even t >= 2s + 2");
  const double e_eps = std::exp(epsilon);
  const double omega = coco_omega(s, epsilon, t);
  const double p_ow = coco_overwrite_probability(s, t);
  const double shared = p_ow * (e_eps + 1.0) / (2.0 * omega);
  return CollisionRates{shared + (1.0 - p_ow) * e_eps / omega, 1.0 / t, shared + (1.0 - p_ow) / omega, p_ow, t};
}

inline double coco_mean_scale(const CollisionRates& rates) {
  const double scale = rates.p_t - rates.p_o;
  if (!(scale > 0)) throw ParameterError("degenerate CoCo mean estimator: p_t equals p_o");
  return scale;
}

inline double coco_nonmissing_scale(const CollisionRates& rates) {
  const double scale = rates.p_t + rates.p_o - 2.0 * rates.p_f;
  if (!(scale > 0)) throw ParameterError("degenerate CoCo non-missing estimator: p_t + p_o equals 2 p_f");
  return scale;
}

inline double coco_mean_contribution(bool plus_hit, bool minus_hit, const CollisionRates& rates) {
  return ((plus_hit ? 1.0 : 0.0) - (minus_hit ? 1.0 : 0.0)) / coco_mean_scale(rates);
}

inline double coco_nonmissing_contribution(bool plus_hit, bool minus_hit, const CollisionRates& rates) {
  return ((plus_hit ? 1.0 : 0.0) + (minus_hit ? 1.0 : 0.0) - 2.0 * rates.p_f) / coco_nonmissing_scale(rates);
}

namespace detail {
inline void check_coco_view(const PrivateView& view, std::uint32_t j, const CollisionRates& rates) {
  require(view.hash.kind() == HashKind::kPaired, "CoCo views carry paired hashes");
  require(view.hash.range() == rates.t, "view was not produced under these rates");
  require(view.z >= 1 && view.z <= rates.t, "view output outside [t]");
  require(j >= 1, "dimension indices start at 1");
}
}  // namespace detail

// Unbiased for [j+ in Y_x] - [j- in Y_x] = x_j.
inline double coco_mean_contribution(const PrivateView& view, std::uint32_t j, const CollisionRates& rates) {
  detail::check_coco_view(view, j, rates);
  return coco_mean_contribution(view.hash.bucket({j, Sign::kPlus}) == view.z,
                                view.hash.bucket({j, Sign::kMinus}) == view.z, rates);
}

// Unbiased for [j+ in Y_x] + [j- in Y_x] = |x_j|.
inline double coco_nonmissing_contribution(const PrivateView& view, std::uint32_t j, const CollisionRates& rates) {
  detail::check_coco_view(view, j, rates);
  return coco_nonmissing_contribution(view.hash.bucket({j, Sign::kPlus}) == view.z,
                                      view.hash.bucket({j, Sign::kMinus}) == view.z, rates);
}

// Single-user squared error summed over all d dimensions.
inline double coco_predicted_mse(std::uint32_t d, std::uint32_t s, const CollisionRates& rates, CocoTarget which) {
  detail::require(s >= 1 && s <= d, "need 1 <= s <= d");
  const double sum = rates.p_t + rates.p_o;
  const double missing = static_cast<double>(d - s);
  if (which == CocoTarget::kNonmissing) {
    const double scale = coco_nonmissing_scale(rates);
    return (s * sum * (1.0 - sum) + missing * 2.0 * rates.p_f * (1.0 - 2.0 * rates.p_f)) / (scale * scale);
  }
  const double scale = coco_mean_scale(rates);
  return (s * (sum - scale * scale) + missing * 2.0 * rates.p_f) / (scale * scale);
}

inline std::uint32_t coco_choose_t(std::uint32_t s, double epsilon, CocoTarget which) {
  detail::require(s >= 1, "s must be positive");
  detail::require(epsilon > 0, "epsilon must be positive");
  const double base = std::exp(epsilon) * s + (which == CocoTarget::kMean ? s + 2.0 : 5.0 * s);
  auto t = static_cast<std::uint32_t>(std::ceil(base - 1e-9));
  if (t % 2 != 0) ++t;
  return std::max(t, 2 * s + 2);
}

}  // namespace sparse_ldp
