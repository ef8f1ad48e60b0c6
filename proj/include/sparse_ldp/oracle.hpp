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

// Exact small-instance computations over explicit, enumerable hash families.
//
// Hash functions are plain lookup tables. A family is a weighted list of
// tables; enumerating a mechanism over a family gives its output law
// jointly over (table, z). Sums are accumulated in long double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparse_ldp/accountant.hpp"
#include "sparse_ldp/coco.hpp"
#include "sparse_ldp/collision.hpp"
#include "sparse_ldp/error.hpp"
#include "sparse_ldp/hash.hpp"
#include "sparse_ldp/rng.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

inline constexpr double kMaxEnumeratedCells = 1e6;  // |family| * t
inline constexpr double kMaxUniformFamilyBits = 20.0;

// Single-kind hash stored as one bucket per event code.
struct SingleTable {
  std::uint32_t t = 1;
  std::vector<std::uint32_t> buckets;  // buckets[code - 1]

  std::uint32_t range() const { return t; }
  std::uint32_t bucket(EventId e) const { return buckets.at(e.code() - 1); }
};

// Paired hash stored as (H1, H2) per dimension.
struct PairedTable {
  std::uint32_t t = 2;
  std::vector<std::uint32_t> first;  // H1(j) in 1..t/2, first[j - 1]
  std::vector<int> second;           // H2(j) in {-1, +1}

  std::uint32_t range() const { return t; }
  std::uint32_t h1(std::uint32_t j) const { return first.at(j - 1); }
  int h2(std::uint32_t j) const { return second.at(j - 1); }
  std::uint32_t bucket(EventId e) const { return paired_bucket(*this, e); }
};

static_assert(SingleHashFunction<SingleTable>);
static_assert(PairedHashFunction<PairedTable>);
static_assert(SingleHashFunction<PairedTable>);

enum class FamilyKind : std::uint8_t {
  kUniform,          // every function on the full event domain
  kUniformOnEvents,  // every function on a chosen subset, the rest pinned
  kSampled,          // seeded random subfamily: results are conditional on it
};

template <typename Table>
struct HashFamily {
  std::vector<Table> members;
  std::vector<long double> weights;
  FamilyKind kind = FamilyKind::kUniform;

  std::size_t size() const { return members.size(); }
  bool conditional() const { return kind == FamilyKind::kSampled; }
  std::uint32_t range() const { return members.empty() ? 0 : members.front().range(); }
};

namespace detail {

inline void check_family_size(double members, std::uint32_t t) {
  if (members * t > kMaxEnumeratedCells) {
    throw SizeLimitError("enumeration exceeds the size guard: |family| * t = " + std::to_string(members * t));
  }
}

inline void check_uniform_bits(double free_slots, double choices_per_slot) {
  if (free_slots * std::log2(choices_per_slot) > kMaxUniformFamilyBits + 1e-12) {
    throw SizeLimitError("uniform family too large; supply a sampled family instead");
  }
}

// Odometer over `slots` digits in base `radix`.
inline bool advance(std::vector<std::uint32_t>& digits, std::uint32_t radix) {
  for (auto& digit : digits) {
    if (++digit < radix) return true;
    digit = 0;
  }
  return false;
}

template <typename Table>
HashFamily<Table> equal_weights(std::vector<Table> members, FamilyKind kind) {
  HashFamily<Table> family;
  const long double w = 1.0L / static_cast<long double>(members.size());
  family.weights.assign(members.size(), w);
  family.members = std::move(members);
  family.kind = kind;
  return family;
}

}  // namespace detail

// Uniform over all assignments of the listed event codes; every other code
// maps to bucket 1.
inline HashFamily<SingleTable> single_family_on_events(std::uint32_t d, std::uint32_t t,
                                                       std::span<const EventId> free_events) {
  detail::require(d >= 1 && t >= 1, "need d, t >= 1");
  detail::check_uniform_bits(static_cast<double>(free_events.size()), t);
  detail::check_family_size(std::pow(static_cast<double>(t), static_cast<double>(free_events.size())), t);
  std::vector<SingleTable> members;
  std::vector<std::uint32_t> digits(free_events.size(), 0);
  do {
    SingleTable table{t, std::vector<std::uint32_t>(2 * d, 1)};
    for (std::size_t k = 0; k < free_events.size(); ++k) table.buckets.at(free_events[k].code() - 1) = digits[k] + 1;
    members.push_back(std::move(table));
  } while (detail::advance(digits, t));
  return detail::equal_weights(std::move(members),
                               free_events.size() == 2 * d ? FamilyKind::kUniform : FamilyKind::kUniformOnEvents);
}

inline HashFamily<SingleTable> single_uniform_family(std::uint32_t d, std::uint32_t t) {
  std::vector<EventId> all;
  for (std::uint32_t code = 1; code <= 2 * d; ++code) all.push_back(EventId::from_code(code));
  return single_family_on_events(d, t, all);
}

inline HashFamily<SingleTable> single_sampled_family(std::uint32_t d, std::uint32_t t, std::size_t size,
                                                     std::uint64_t seed) {
  detail::require(size >= 1, "family must be non-empty");
  detail::check_family_size(static_cast<double>(size), t);
  Rng rng = make_rng(seed);
  std::vector<SingleTable> members;
  members.reserve(size);
  for (std::size_t k = 0; k < size; ++k) {
    SingleTable table{t, std::vector<std::uint32_t>(2 * d)};
    for (auto& b : table.buckets) b = static_cast<std::uint32_t>(uniform_below(rng, t)) + 1;
    members.push_back(std::move(table));
  }
  return detail::equal_weights(std::move(members), FamilyKind::kSampled);
}

// Uniform over (H1, H2) on the listed dimensions; the rest pinned to (1, +1).
inline HashFamily<PairedTable> paired_family_on_dimensions(std::uint32_t d, std::uint32_t t,
                                                           std::span<const std::uint32_t> free_dims) {
  detail::require(d >= 1 && t >= 2 && t % 2 == 0, "paired families need d >= 1 and even t");
  detail::check_uniform_bits(static_cast<double>(free_dims.size()), t);
  detail::check_family_size(std::pow(static_cast<double>(t), static_cast<double>(free_dims.size())), t);
  std::vector<PairedTable> members;
  std::vector<std::uint32_t> digits(free_dims.size(), 0);  // digit = 2 (H1 - 1) + [H2 = +1]
  do {
    PairedTable table{t, std::vector<std::uint32_t>(d, 1), std::vector<int>(d, 1)};
    for (std::size_t k = 0; k < free_dims.size(); ++k) {
      table.first.at(free_dims[k] - 1) = digits[k] / 2 + 1;
      table.second.at(free_dims[k] - 1) = digits[k] % 2 == 1 ? 1 : -1;
    }
    members.push_back(std::move(table));
  } while (detail::advance(digits, t));
  return detail::equal_weights(std::move(members),
                               free_dims.size() == d ? FamilyKind::kUniform : FamilyKind::kUniformOnEvents);
}

inline HashFamily<PairedTable> paired_uniform_family(std::uint32_t d, std::uint32_t t) {
  std::vector<std::uint32_t> all(d);
  for (std::uint32_t j = 0; j < d; ++j) all[j] = j + 1;
  return paired_family_on_dimensions(d, t, all);
}

inline HashFamily<PairedTable> paired_sampled_family(std::uint32_t d, std::uint32_t t, std::size_t size,
                                                     std::uint64_t seed) {
  detail::require(size >= 1, "family must be non-empty");
  detail::require(t >= 2 && t % 2 == 0, "paired families need an even t");
  detail::check_family_size(static_cast<double>(size), t);
  Rng rng = make_rng(seed);
  std::vector<PairedTable> members;
  members.reserve(size);
  for (std::size_t k = 0; k < size; ++k) {
    PairedTable table{t, std::vector<std::uint32_t>(d), std::vector<int>(d)};
    for (std::uint32_t j = 0; j < d; ++j) {
      table.first[j] = static_cast<std::uint32_t>(uniform_below(rng, t / 2)) + 1;
      table.second[j] = fair_coin(rng) ? 1 : -1;
    }
    members.push_back(std::move(table));
  }
  return detail::equal_weights(std::move(members), FamilyKind::kSampled);
}

// Every s-sparse ternary vector of dimension d.
inline std::vector<TernaryVector> all_inputs(std::uint32_t d, std::uint32_t s) {
  detail::require(s >= 1 && s <= d && d <= 20, "all_inputs needs 1 <= s <= d <= 20");
  std::vector<TernaryVector> out;
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    if (static_cast<std::uint32_t>(__builtin_popcount(mask)) != s) continue;
    for (std::uint32_t signs = 0; signs < (1u << s); ++signs) {
      std::vector<SupportEntry> support;
      std::uint32_t k = 0;
      for (std::uint32_t j = 0; j < d; ++j) {
        if ((mask >> j & 1u) == 0) continue;
        support.push_back({j + 1, (signs >> k & 1u) != 0 ? Sign::kPlus : Sign::kMinus});
        ++k;
      }
      out.emplace_back(d, std::move(support));
    }
  }
  return out;
}

// Output law conditional on one table.
inline std::vector<double> conditional_law(const CollisionParams& params, const TernaryVector& x,
                                           const SingleTable& table) {
  return collision_law(x, table, params).dense();
}

inline std::vector<double> conditional_law(const MechanismParams& coco_params, const TernaryVector& x,
                                           const PairedTable& table) {
  return coco_law(x, table, coco_params);
}

namespace detail {
inline std::uint32_t range_of(const CollisionParams& p) { return p.base.t; }
inline std::uint32_t range_of(const MechanismParams& p) { return p.t; }
}  // namespace detail

struct ExactEntry {
  std::uint32_t table = 0;  // index into the family
  std::uint32_t z = 1;
  long double p = 0;
};

struct ExactDistribution {
  std::vector<ExactEntry> entries;
  std::uint32_t t = 0;
  bool conditional = false;

  long double total() const {
    long double sum = 0;
    for (const auto& e : entries) sum += e.p;
    return sum;
  }

  bool valid(long double tolerance = 1e-12L) const {
    return std::all_of(entries.begin(), entries.end(), [](const ExactEntry& e) { return e.p >= 0; }) &&
           std::fabs(total() - 1.0L) <= tolerance;
  }

  // Law of z alone, indexed z - 1.
  std::vector<long double> marginal() const {
    std::vector<long double> out(t, 0.0L);
    for (const auto& e : entries) out.at(e.z - 1) += e.p;
    return out;
  }
};

template <typename Params, typename Table>
ExactDistribution enumerate_distribution(const Params& params, const TernaryVector& x,
                                         const HashFamily<Table>& family) {
  const std::uint32_t t = detail::range_of(params);
  detail::require(family.size() > 0 && family.range() == t, "family range does not match t");
  detail::check_family_size(static_cast<double>(family.size()), t);
  ExactDistribution out;
  out.t = t;
  out.conditional = family.conditional();
  out.entries.reserve(family.size() * t);
  for (std::size_t h = 0; h < family.size(); ++h) {
    const auto law = conditional_law(params, x, family.members[h]);
    for (std::uint32_t z = 1; z <= t; ++z) {
      out.entries.push_back({static_cast<std::uint32_t>(h), z, family.weights[h] * static_cast<long double>(law[z - 1])});
    }
  }
  return out;
}

struct LdpCheck {
  double max_log_ratio = 0;
  std::size_t table = 0;  // witness
  std::uint32_t z = 0;
};

// Largest log(P[z | x] / P[z | x']) over all laws in `laws` at every z.
inline double max_log_ratio(std::span<const std::vector<double>> laws, std::uint32_t* witness_z = nullptr) {
  double best = 0.0;
  if (laws.empty()) return best;
  for (std::size_t z = 0; z < laws.front().size(); ++z) {
    double hi = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& law : laws) {
      hi = std::max(hi, law[z]);
      lo = std::min(lo, law[z]);
    }
    const double r = hi == 0.0 ? 0.0 : (lo == 0.0 ? std::numeric_limits<double>::infinity() : std::log(hi / lo));
    if (r > best) {
      best = r;
      if (witness_z != nullptr) *witness_z = static_cast<std::uint32_t>(z + 1);
    }
  }
  return best;
}

// Max over (x, x', table, z) of log P[z | x, table] / P[z | x', table], with
// x, x' ranging over every s-sparse input.
template <typename Params, typename Table>
LdpCheck verify_ldp(const Params& params, std::uint32_t d, std::uint32_t s, const HashFamily<Table>& family) {
  const std::uint32_t t = detail::range_of(params);
  detail::require(family.size() > 0 && family.range() == t, "family range does not match t");
  detail::check_family_size(static_cast<double>(family.size()), t);
  const auto inputs = all_inputs(d, s);
  LdpCheck check;
  std::vector<std::vector<double>> laws(inputs.size());
  for (std::size_t h = 0; h < family.size(); ++h) {
    for (std::size_t k = 0; k < inputs.size(); ++k) laws[k] = conditional_law(params, inputs[k], family.members[h]);
    std::uint32_t z = 0;
    const double r = max_log_ratio(laws, &z);
    if (r > check.max_log_ratio) check = LdpCheck{r, h, z};
  }
  return check;
}

inline LdpCheck verify_ldp(const CollisionParams& params, const HashFamily<SingleTable>& family) {
  return verify_ldp(params, params.base.d, params.base.s, family);
}

inline LdpCheck verify_ldp(const MechanismParams& coco_params, const HashFamily<PairedTable>& family) {
  return verify_ldp(coco_params, coco_params.d, coco_params.s, family);
}

struct Moments {
  long double mean = 0;
  long double variance = 0;
};

namespace detail {
template <typename Table, typename Law, typename Value>
Moments moments_over_family(const HashFamily<Table>& family, std::uint32_t t, Law&& law_of, Value&& value_of) {
  require(family.size() > 0 && family.range() == t, "family range does not match t");
  check_family_size(static_cast<double>(family.size()), t);
  long double first = 0;
  long double second = 0;
  for (std::size_t h = 0; h < family.size(); ++h) {
    const auto law = law_of(family.members[h]);
    for (std::uint32_t z = 1; z <= t; ++z) {
      const long double p = family.weights[h] * static_cast<long double>(law[z - 1]);
      const long double v = value_of(family.members[h], z);
      first += p * v;
      second += p * v * v;
    }
  }
  return Moments{first, second - first * first};
}
}  // namespace detail

// Moments of the Collision indicator estimator for `event`.
inline Moments exact_estimator_moments(const CollisionParams& params, const TernaryVector& x, EventId event,
                                       const HashFamily<SingleTable>& family) {
  return detail::moments_over_family(
      family, params.base.t, [&](const SingleTable& h) { return conditional_law(params, x, h); },
      [&](const SingleTable& h, std::uint32_t z) {
        return static_cast<long double>(collision_indicator_estimate(h.bucket(event) == z, params));
      });
}

// Moments of a CoCo contribution for dimension j. Rates come from the ideal
// uniform hash, so the mean is exact only over uniform families.
inline Moments exact_estimator_moments(const MechanismParams& coco_params, const TernaryVector& x, std::uint32_t j,
                                       CocoTarget which, const HashFamily<PairedTable>& family) {
  const auto rates = collision_rates(coco_params.s, coco_params.epsilon, coco_params.t);
  return detail::moments_over_family(
      family, coco_params.t, [&](const PairedTable& h) { return conditional_law(coco_params, x, h); },
      [&](const PairedTable& h, std::uint32_t z) {
        const bool plus = h.bucket({j, Sign::kPlus}) == z;
        const bool minus = h.bucket({j, Sign::kMinus}) == z;
        return static_cast<long double>(which == CocoTarget::kMean ? coco_mean_contribution(plus, minus, rates)
                                                                   : coco_nonmissing_contribution(plus, minus, rates));
      });
}

struct MixtureDecomposition {
  ExactDistribution q1;
  ExactDistribution q1_prime;
  ExactDistribution q1_star;
  double beta = 0;
};

// Splits R1 into e^eps beta Q1 + beta Q1' + (1 - beta - e^eps beta) Q1*, where
// Q1 and Q1' carry the excess of R1 over R1' and of R1' over R1.
inline MixtureDecomposition mixture_decompose(const ExactDistribution& r1, const ExactDistribution& r1_prime,
                                              double epsilon) {
  detail::require(r1.entries.size() == r1_prime.entries.size(), "distributions must share a support");
  detail::require(std::isfinite(epsilon) && epsilon >= 0, "epsilon must be non-negative");
  const long double e_eps = std::exp(static_cast<long double>(epsilon));
  const long double spread = e_eps - 1.0L;
  long double excess = 0;
  for (std::size_t k = 0; k < r1.entries.size(); ++k) {
    const auto& a = r1.entries[k];
    const auto& b = r1_prime.entries[k];
    detail::require(a.table == b.table && a.z == b.z, "distributions must share a support");
    const long double hi = std::max(a.p, b.p);
    const long double lo = std::min(a.p, b.p);
    detail::require(hi <= e_eps * lo * (1.0L + 1e-12L) + 1e-300L, "ratio bound e^eps violated");
    excess += std::max(0.0L, a.p - b.p);
  }
  MixtureDecomposition out;
  out.q1 = out.q1_prime = out.q1_star = r1;
  const long double beta = spread > 0 ? excess / spread : 0.0L;
  out.beta = static_cast<double>(beta);
  const long double rest = 1.0L - beta - e_eps * beta;
  for (std::size_t k = 0; k < r1.entries.size(); ++k) {
    const long double a = r1.entries[k].p;
    const long double b = r1_prime.entries[k].p;
    if (beta > 0) {
      out.q1.entries[k].p = a > b ? (a - b) / (spread * beta) : 0.0L;
      out.q1_prime.entries[k].p = b > a ? (b - a) / (spread * beta) : 0.0L;
    } else {
      out.q1.entries[k].p = 0;
      out.q1_prime.entries[k].p = 0;
    }
    if (beta > 0 && rest > 1e-15L) {
      const long double star = std::min(a, b) / rest - std::fabs(a - b) / (spread * rest);
      out.q1_star.entries[k].p = std::max(0.0L, star);
    } else if (beta > 0) {
      out.q1_star.entries[k].p = std::min(a, b);  // carries no weight
    }
  }
  return out;
}

// sum_H P[H] (s - |H(Y_x) cap H(Y_x')|) / Omega for Collision inputs: the
// mixture weight an idealised analysis assigns to the pair (x, x').
inline double collision_ideal_beta(const CollisionParams& params, const TernaryVector& x, const TernaryVector& x_prime,
                                   const HashFamily<SingleTable>& family) {
  long double beta = 0;
  for (std::size_t h = 0; h < family.size(); ++h) {
    const auto a = collision_law(x, family.members[h], params).hit_buckets;
    const auto b = collision_law(x_prime, family.members[h], params).hit_buckets;
    std::vector<std::uint32_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    beta += family.weights[h] * (static_cast<long double>(params.base.s) - common.size()) / params.omega;
  }
  return static_cast<double>(beta);
}

using LatticeDistribution = std::map<std::pair<std::uint64_t, std::uint64_t>, long double>;

// Worst-case instance for the shuffled Collision batch: d = 3s; user 1 holds
// x1 (dims 1..s) or, when `swapped`, x1' (dims s+1..2s); users 2..n hold x*
// (dims 2s+1..3s). One table sends the three positive event sets to disjoint
// bucket blocks. The statistic g maps z to (1,0) on x1's block, (0,1) on
// x1''s block and (0,0) elsewhere; g_n sums g over the batch.
inline LatticeDistribution lower_bound_statistic_distribution(std::uint64_t n, std::uint32_t s, double epsilon,
                                                              std::uint32_t t, bool swapped = false) {
  detail::require(n >= 1, "batch must be non-empty");
  detail::require(s >= 1 && t >= 3 * s, "construction needs t >= 3s");
  const std::uint32_t d = 3 * s;
  const auto params = CollisionParams::make(d, s, epsilon, t);
  SingleTable table{t, std::vector<std::uint32_t>(2 * d, 1)};
  std::vector<SupportEntry> first;
  std::vector<SupportEntry> second;
  std::vector<SupportEntry> others;
  for (std::uint32_t k = 1; k <= s; ++k) {
    table.buckets[EventId{k, Sign::kPlus}.code() - 1] = k;
    table.buckets[EventId{s + k, Sign::kPlus}.code() - 1] = s + k;
    table.buckets[EventId{2 * s + k, Sign::kPlus}.code() - 1] = 2 * s + k;
    first.push_back({k, Sign::kPlus});
    second.push_back({s + k, Sign::kPlus});
    others.push_back({2 * s + k, Sign::kPlus});
  }
  const auto statistic = [&](const TernaryVector& x) {
    const auto law = collision_law(x, table, params);
    std::map<std::pair<std::uint64_t, std::uint64_t>, long double> g;
    for (std::uint32_t z = 1; z <= t; ++z) {
      const auto key = z <= s ? std::pair<std::uint64_t, std::uint64_t>{1, 0}
                       : z <= 2 * s ? std::pair<std::uint64_t, std::uint64_t>{0, 1}
                                    : std::pair<std::uint64_t, std::uint64_t>{0, 0};
      g[key] += law.probability(z);
    }
    return g;
  };
  const TernaryVector x1(d, swapped ? second : first);
  const TernaryVector x_star(d, others);
  LatticeDistribution total = statistic(x1);
  const auto step = statistic(x_star);
  for (std::uint64_t i = 1; i < n; ++i) {
    LatticeDistribution next;
    for (const auto& [a, pa] : total) {
      for (const auto& [b, pb] : step) next[{a.first + b.first, a.second + b.second}] += pa * pb;
    }
    total = std::move(next);
  }
  return total;
}

}  // namespace sparse_ldp
