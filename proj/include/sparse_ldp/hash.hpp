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

// User-specific hash functions.
//
// A single hash maps events onto [t]. A paired hash is the (H1, H2) couple
// used by CoCo: H1 maps dimensions onto [t/2], H2 assigns each dimension a
// sign, and the event j_b lands in H1(j) + ((b * H2(j) + 1) / 2) * (t / 2).
// Both events of a dimension therefore occupy the two halves of the bucket
// pair (H1(j), H1(j) + t/2).
//
// UserHash realizes the random hash choice with a keyed PRF so that a 64-bit
// seed identifies the whole function. Explicit lookup tables with the same
// interface live in oracle.hpp.

#include <concepts>
#include <cstdint>
#include <string>

#include "sparse_ldp/error.hpp"
#include "sparse_ldp/rng.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

enum class HashKind : std::uint8_t { kSingle, kPaired };

template <typename H>
concept SingleHashFunction = requires(const H& h, EventId e) {
  { h.range() } -> std::convertible_to<std::uint32_t>;
  { h.bucket(e) } -> std::convertible_to<std::uint32_t>;
};

template <typename H>
concept PairedHashFunction = requires(const H& h, std::uint32_t j) {
  { h.range() } -> std::convertible_to<std::uint32_t>;
  { h.h1(j) } -> std::convertible_to<std::uint32_t>;
  { h.h2(j) } -> std::convertible_to<int>;
};

// Overall CoCo bucket H(j_b) of an event under a paired hash.
template <PairedHashFunction H>
std::uint32_t paired_bucket(const H& hash, EventId event) {
  const std::uint32_t half = hash.range() / 2;
  const int orientation = to_int(event.sign) * hash.h2(event.index);
  return hash.h1(event.index) + (orientation > 0 ? half : 0);
}

// The other member of the bucket pair holding `bucket`.
constexpr std::uint32_t paired_partner(std::uint32_t h1, std::uint32_t t, std::uint32_t bucket) {
  return 2 * h1 + t / 2 - bucket;
}

class UserHash {
 public:
  UserHash(std::uint64_t seed, HashKind kind, std::uint32_t range)
      : seed_(seed), kind_(kind), range_(range) {
    detail::require(range_ >= 1, "hash range must be positive");
    if (kind_ == HashKind::kPaired) {
      detail::require(range_ % 2 == 0 && range_ >= 2, "paired hashes need an even range");
    }
  }

  std::uint64_t seed() const noexcept { return seed_; }
  HashKind kind() const noexcept { return kind_; }
  std::uint32_t range() const noexcept { return range_; }

  // H(e) in 1..t for either kind.
  std::uint32_t bucket(EventId event) const {
    if (kind_ == HashKind::kPaired) return paired_bucket(*this, event);
    return 1 + static_cast<std::uint32_t>(reduce(prf(seed_, kSingleTag, event.code()), range_));
  }

  std::uint32_t h1(std::uint32_t index) const {
    require_paired();
    return 1 + static_cast<std::uint32_t>(reduce(prf(seed_, kPairTag, index), range_ / 2));
  }

  int h2(std::uint32_t index) const {
    require_paired();
    return (prf(seed_, kSignTag, index) >> 63) != 0 ? 1 : -1;
  }

  friend bool operator==(const UserHash&, const UserHash&) = default;

 private:
  static constexpr std::uint64_t kSingleTag = 0x53494e474c45ULL;
  static constexpr std::uint64_t kPairTag = 0x5041495231ULL;
  static constexpr std::uint64_t kSignTag = 0x5349474e32ULL;

  void require_paired() const {
    if (kind_ != HashKind::kPaired) throw ParameterError("h1/h2 are only defined for paired hashes");
  }

  std::uint64_t seed_;
  HashKind kind_;
  std::uint32_t range_;
};

static_assert(SingleHashFunction<UserHash>);
static_assert(PairedHashFunction<UserHash>);

inline std::uint64_t user_seed(std::uint64_t master_seed, std::uint64_t user_index) {
  return prf(master_seed, 0x55534552ULL, user_index);
}

inline UserHash draw_user_hash(std::uint64_t master_seed, std::uint64_t user_index, HashKind kind,
                               std::uint32_t range) {
  return UserHash(user_seed(master_seed, user_index), kind, range);
}

}  // namespace sparse_ldp
