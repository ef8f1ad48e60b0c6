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

// Portable randomness primitives. The engine output sequence of
// std::mt19937_64 is fixed by the standard, but the standard distributions
// are not, so every conversion from raw bits is done here to keep
// experiments bit-reproducible across standard libraries.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace sparse_ldp {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Keyed pseudorandom function on 64-bit words.
constexpr std::uint64_t prf(std::uint64_t key, std::uint64_t message) noexcept {
  return mix64(mix64(key + 0x9e3779b97f4a7c15ULL) ^ (message * 0xd6e8feb86659fd93ULL + 1));
}

constexpr std::uint64_t prf(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
  return prf(prf(key, a), b);
}

// Maps 64 uniform bits onto [0, range) by multiply-high.
constexpr std::uint64_t reduce(std::uint64_t bits, std::uint64_t range) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits) * range) >> 64);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, range); unbiased (Lemire's rejection method).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t range) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

inline bool fair_coin(Rng& rng) { return (rng() >> 63) != 0; }

// Unbiased Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace sparse_ldp
