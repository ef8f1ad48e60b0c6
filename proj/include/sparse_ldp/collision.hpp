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

// The (d, s, epsilon, t)-Collision randomizer.
//
// Given the user's hash H, every bucket hit by some event of Y_x is output
// with probability e^eps / Omega, Omega = s e^eps + t - s. The remaining mass
// is spread evenly over the t - k buckets not hit, where k = |H(Y_x)| counts
// distinct hashed values. Since k <= s, every output probability lies in
// [1/Omega, e^eps/Omega].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sparse_ldp/error.hpp"
#include "sparse_ldp/hash.hpp"
#include "sparse_ldp/mechanism.hpp"
#include "sparse_ldp/rng.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

struct CollisionParams {
  MechanismParams base;
  double omega = 0;

  static CollisionParams make(const MechanismParams& base) {
    base.validate();
    detail::require(base.t > base.s, "Collision requires t > s");
    const double s = base.s;
    return CollisionParams{base, s * std::exp(base.epsilon) + base.t - s};
  }

  static CollisionParams make(std::uint32_t d, std::uint32_t s, double epsilon, std::uint32_t t) {
    return make(MechanismParams{d, s, epsilon, t});
  }

  double hit_probability() const { return std::exp(base.epsilon) / omega; }
  double false_probability() const { return 1.0 / base.t; }
};

// Output law of the Collision randomizer for one fixed hash function.
struct CollisionLaw {
  std::uint32_t t = 0;
  std::vector<std::uint32_t> hit_buckets;  // distinct, ascending
  double hit_probability = 0;
  double residual_probability = 0;

  bool is_hit(std::uint32_t z) const { return std::binary_search(hit_buckets.begin(), hit_buckets.end(), z); }
  double probability(std::uint32_t z) const { return is_hit(z) ? hit_probability : residual_probability; }

  std::vector<double> dense() const {
    std::vector<double> p(t);
    for (std::uint32_t z = 1; z <= t; ++z) p[z - 1] = probability(z);
    return p;
  }
};

template <SingleHashFunction H>
CollisionLaw collision_law(const TernaryVector& x, const H& hash, const CollisionParams& params) {
  params.base.check_input(x);
  detail::require(hash.range() == params.base.t, "hash range does not match t");
  CollisionLaw law;
  law.t = params.base.t;
  law.hit_buckets.reserve(x.sparsity());
  for (const auto& e : x.support()) law.hit_buckets.push_back(hash.bucket(EventId{e.index, e.sign}));
  std::sort(law.hit_buckets.begin(), law.hit_buckets.end());
  law.hit_buckets.erase(std::unique(law.hit_buckets.begin(), law.hit_buckets.end()), law.hit_buckets.end());
  const double k = static_cast<double>(law.hit_buckets.size());
  const double e_eps = std::exp(params.base.epsilon);
  law.hit_probability = e_eps / params.omega;
  law.residual_probability = (params.omega - e_eps * k) / ((params.base.t - k) * params.omega);
  return law;
}

// Two-segment inverse CDF on one uniform draw; O(k) time.
inline std::uint32_t sample_collision_law(const CollisionLaw& law, Rng& rng) {
  const auto k = static_cast<std::uint32_t>(law.hit_buckets.size());
  const double u = uniform01(rng);
  const double hit_mass = k * law.hit_probability;
  if (u < hit_mass) {
    const auto slot = std::min<std::uint32_t>(k - 1, static_cast<std::uint32_t>(u / law.hit_probability));
    return law.hit_buckets[slot];
  }
  const std::uint32_t residual_count = law.t - k;
  auto rank = static_cast<std::uint32_t>((u - hit_mass) / law.residual_probability);
  rank = std::min(rank, residual_count - 1);
  // rank-th bucket (0-based) outside the hit set
  std::uint32_t z = rank + 1;
  for (const auto h : law.hit_buckets) {
    if (h <= z) ++z;
  }
  return z;
}

inline PrivateView collision_randomize(const TernaryVector& x, const UserHash& hash,
                                       const CollisionParams& params, Rng& rng) {
  detail::require(hash.kind() == HashKind::kSingle, "Collision needs a single-kind hash");
  return PrivateView{hash, sample_collision_law(collision_law(x, hash, params), rng)};
}

// max(s + 1, floor(s e^eps + 2s - 1)). The floor absorbs a 1e-9 rounding
// slack so that exactly-integral arguments such as s = 1, eps = ln 2 are not
// pushed down by the last bit of exp().
inline std::uint32_t collision_optimal_t(std::uint32_t s, double epsilon) {
  detail::require(s >= 1, "s must be positive");
  detail::require(epsilon > 0, "epsilon must be positive");
  const double raw = s * std::exp(epsilon) + 2.0 * s - 1.0;
  const auto t = static_cast<std::uint32_t>(std::floor(raw + 1e-9));
  return std::max(s + 1, t);
}

// Denominator e^eps/Omega - 1/t of the indicator estimator.
inline double collision_estimator_scale(const CollisionParams& params) {
  const double scale = params.hit_probability() - params.false_probability();
  if (!(scale > 0)) throw ParameterError("degenerate Collision estimator: e^eps/Omega equals 1/t");
  return scale;
}

inline double collision_indicator_estimate(bool hit, const CollisionParams& params) {
  return ((hit ? 1.0 : 0.0) - params.false_probability()) / collision_estimator_scale(params);
}

// Unbiased estimate of [event in Y_x] from one view.
inline double collision_indicator_estimate(const PrivateView& view, EventId event, const CollisionParams& params) {
  detail::require(view.hash.range() == params.base.t, "view was not produced under these parameters");
  detail::require(view.z >= 1 && view.z <= params.base.t, "view output outside [t]");
  return collision_indicator_estimate(view.hash.bucket(event) == view.z, params);
}

// Variance of the per-user indicator estimator: p(1-p)/(e^eps/Omega - 1/t)^2
// with p = e^eps/Omega for true events and p = 1/t for false ones.
inline double collision_indicator_variance(bool event_present, const CollisionParams& params) {
  const double scale = collision_estimator_scale(params);
  const double p = event_present ? params.hit_probability() : params.false_probability();
  return p * (1 - p) / (scale * scale);
}

// Summed single-user variance over all 2d events, with t treated as a real
// number so the curve can be studied between integers.
inline double collision_summed_variance(std::uint32_t d, std::uint32_t s, double epsilon, double t) {
  const double e_eps = std::exp(epsilon);
  const double omega = s * e_eps + t - s;
  const double p = e_eps / omega;
  const double q = 1.0 / t;
  return (s * p * (1 - p) + (2.0 * d - s) * q * (1 - q)) / ((p - q) * (p - q));
}

}  // namespace sparse_ldp
