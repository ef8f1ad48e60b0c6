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

// Sparse ternary vectors and the signed event domain.
//
// A vector x in {-1, 0, +1}^d with s non-zero entries is stored by its
// support. Each non-zero entry (j, b) is also an "event" j_b; the 2d events
// of a d-dimensional space are numbered 1..2d by code(j, -1) = 2j - 1 and
// code(j, +1) = 2j. Dimension indices are 1-based throughout.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparse_ldp/error.hpp"
#include "sparse_ldp/rng.hpp"

namespace sparse_ldp {

enum class Sign : std::int8_t { kMinus = -1, kPlus = 1 };

constexpr int to_int(Sign sign) noexcept { return static_cast<int>(sign); }
constexpr Sign opposite(Sign sign) noexcept { return sign == Sign::kPlus ? Sign::kMinus : Sign::kPlus; }

struct EventId {
  std::uint32_t index = 1;
  Sign sign = Sign::kPlus;

  constexpr std::uint32_t code() const noexcept {
    return sign == Sign::kPlus ? 2 * index : 2 * index - 1;
  }

  static constexpr EventId from_code(std::uint32_t code) {
    if (code == 0) throw ParameterError("event codes start at 1");
    return EventId{(code + 1) / 2, code % 2 == 0 ? Sign::kPlus : Sign::kMinus};
  }

  friend constexpr bool operator==(const EventId&, const EventId&) = default;
  friend constexpr auto operator<=>(const EventId& a, const EventId& b) noexcept {
    return a.code() <=> b.code();
  }
};

struct SupportEntry {
  std::uint32_t index = 1;
  Sign sign = Sign::kPlus;

  friend constexpr bool operator==(const SupportEntry&, const SupportEntry&) = default;
};

class TernaryVector {
 public:
  TernaryVector(std::uint32_t dimension, std::vector<SupportEntry> support)
      : dimension_(dimension), support_(std::move(support)) {
    detail::require(dimension_ >= 1, "dimension must be positive");
    detail::require(!support_.empty(), "a ternary vector needs at least one non-zero entry");
    detail::require(support_.size() <= dimension_, "sparsity exceeds dimension");
    for (std::size_t k = 0; k < support_.size(); ++k) {
      const auto& e = support_[k];
      detail::require(e.index >= 1 && e.index <= dimension_,
                      "support index " + std::to_string(e.index) + " out of range");
      detail::require(e.sign == Sign::kPlus || e.sign == Sign::kMinus, "sign must be -1 or +1");
      if (k > 0) detail::require(support_[k - 1].index < e.index, "support indices must be strictly increasing");
    }
  }

  static TernaryVector from_dense(std::span<const int> values) {
    std::vector<SupportEntry> support;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const int v = values[j];
      detail::require(v >= -1 && v <= 1, "dense entries must lie in {-1, 0, 1}");
      if (v != 0) support.push_back({static_cast<std::uint32_t>(j + 1), v > 0 ? Sign::kPlus : Sign::kMinus});
    }
    return TernaryVector(static_cast<std::uint32_t>(values.size()), std::move(support));
  }

  // Inverse of event_set(); events may be given in any order.
  static TernaryVector from_events(std::uint32_t dimension, std::span<const EventId> events) {
    std::vector<SupportEntry> support;
    support.reserve(events.size());
    for (const auto& e : events) support.push_back({e.index, e.sign});
    std::sort(support.begin(), support.end(),
              [](const SupportEntry& a, const SupportEntry& b) { return a.index < b.index; });
    return TernaryVector(dimension, std::move(support));
  }

  std::uint32_t dimension() const noexcept { return dimension_; }
  std::uint32_t sparsity() const noexcept { return static_cast<std::uint32_t>(support_.size()); }
  std::span<const SupportEntry> support() const noexcept { return support_; }

  int value(std::uint32_t index) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), index,
                               [](const SupportEntry& e, std::uint32_t j) { return e.index < j; });
    return (it != support_.end() && it->index == index) ? to_int(it->sign) : 0;
  }

  bool contains(EventId event) const { return value(event.index) == to_int(event.sign); }

  std::vector<int> to_dense() const {
    std::vector<int> dense(dimension_, 0);
    for (const auto& e : support_) dense[e.index - 1] = to_int(e.sign);
    return dense;
  }

  friend bool operator==(const TernaryVector&, const TernaryVector&) = default;

 private:
  std::uint32_t dimension_;
  std::vector<SupportEntry> support_;
};

// Set form Y_x of a ternary vector, ordered by dimension.
inline std::vector<EventId> event_set(const TernaryVector& x) {
  std::vector<EventId> events;
  events.reserve(x.sparsity());
  for (const auto& e : x.support()) events.push_back({e.index, e.sign});
  return events;
}

// Harness utility: max-min normalizes real values onto [-1, 1] and rounds each
// coordinate stochastically to {-1, 0, 1}, preserving its expectation. The
// result may have any number of non-zero entries, including none.
inline std::vector<int> ternarize(std::span<const double> values, Rng& rng) {
  std::vector<int> out(values.size(), 0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double v = span > 0 ? 2.0 * (values[j] - *lo) / span - 1.0 : 0.0;
    const double u = uniform01(rng);
    if (v >= 0) {
      out[j] = u < v ? 1 : 0;
    } else {
      out[j] = u < -v ? -1 : 0;
    }
  }
  return out;
}

}  // namespace sparse_ldp
