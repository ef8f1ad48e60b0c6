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

// Comparison mechanisms for key-value style data: PrivKV (sample a
// dimension, 3-ary randomized response on its value) and PCKV (sample a
// non-zero entry, randomized response over the 2d event codes).

#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "sparse_ldp/error.hpp"
#include "sparse_ldp/rng.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

enum class BaselineKind : std::uint8_t { kPrivKV, kPckvGrr, kPckvAgrr };

// Budget PCKV-AGRR spends on its inner randomized response.
inline double agrr_epsilon(std::uint32_t s, double epsilon) {
  return std::log(s * std::expm1(epsilon) + 1.0);
}

struct BaselineParams {
  std::uint32_t d = 1;
  std::uint32_t s = 1;
  double epsilon = 1.0;
  BaselineKind variant = BaselineKind::kPrivKV;

  void validate() const {
    detail::require(d >= 1, "d must be positive");
    detail::require(s >= 1 && s <= d, "need 1 <= s <= d");
    detail::require(std::isfinite(epsilon) && epsilon >= 0, "epsilon must be a finite non-negative number");
  }

  double inner_epsilon() const { return variant == BaselineKind::kPckvAgrr ? agrr_epsilon(s, epsilon) : epsilon; }

  // Number of randomized-response categories.
  std::uint32_t categories() const { return variant == BaselineKind::kPrivKV ? 3 : 2 * d; }

  friend bool operator==(const BaselineParams&, const BaselineParams&) = default;
};

// Generalized randomized response over k categories.
struct Grr {
  double p = 0;  // probability of the true category
  double q = 0;  // probability of each other category

  static Grr make(std::uint32_t k, double epsilon) {
    detail::require(k >= 2, "randomized response needs two categories");
    const double e_eps = std::exp(epsilon);
    return Grr{e_eps / (e_eps + k - 1.0), 1.0 / (e_eps + k - 1.0)};
  }

  double scale() const {
    if (!(p > q)) throw ParameterError("degenerate randomized response at zero budget");
    return p - q;
  }
};

inline std::uint32_t grr_sample(std::uint32_t truth, std::uint32_t k, const Grr& grr, Rng& rng) {
  if (uniform01(rng) < grr.p) return truth;
  const auto other = static_cast<std::uint32_t>(uniform_below(rng, k - 1));
  return other >= truth ? other + 1 : other;
}

struct PrivkvReport {
  std::uint32_t j = 1;
  int response = 0;  // in {-1, 0, +1}

  friend bool operator==(const PrivkvReport&, const PrivkvReport&) = default;
};

struct PckvReport {
  std::uint32_t code = 1;  // event code in 1..2d

  friend bool operator==(const PckvReport&, const PckvReport&) = default;
};

inline void check_baseline_input(const TernaryVector& x, const BaselineParams& params) {
  params.validate();
  detail::require(x.dimension() == params.d, "input dimension does not match d");
  detail::require(x.sparsity() == params.s, "input sparsity does not match s");
}

inline PrivkvReport privkv_randomize(const TernaryVector& x, const BaselineParams& params, Rng& rng) {
  check_baseline_input(x, params);
  detail::require(params.variant == BaselineKind::kPrivKV, "params are not PrivKV");
  const auto j = static_cast<std::uint32_t>(uniform_below(rng, params.d)) + 1;
  const auto truth = static_cast<std::uint32_t>(x.value(j) + 1);
  const auto r = grr_sample(truth, 3, Grr::make(3, params.epsilon), rng);
  return PrivkvReport{j, static_cast<int>(r) - 1};
}

inline PckvReport pckv_randomize(const TernaryVector& x, const BaselineParams& params, Rng& rng) {
  check_baseline_input(x, params);
  detail::require(params.variant != BaselineKind::kPrivKV, "params are not PCKV");
  const auto& entry = x.support()[uniform_below(rng, params.s)];
  const std::uint32_t truth = EventId{entry.index, entry.sign}.code() - 1;
  const std::uint32_t k = 2 * params.d;
  return PckvReport{grr_sample(truth, k, Grr::make(k, params.inner_epsilon()), rng) + 1};
}

// Exact output laws, indexed PrivKV: 3 (j - 1) + (r + 1); PCKV: code - 1.
inline std::vector<double> privkv_law(const TernaryVector& x, const BaselineParams& params) {
  check_baseline_input(x, params);
  const Grr grr = Grr::make(3, params.epsilon);
  std::vector<double> law(3 * params.d);
  for (std::uint32_t j = 1; j <= params.d; ++j) {
    for (int r = -1; r <= 1; ++r) law[3 * (j - 1) + (r + 1)] = (x.value(j) == r ? grr.p : grr.q) / params.d;
  }
  return law;
}

inline std::vector<double> pckv_law(const TernaryVector& x, const BaselineParams& params) {
  check_baseline_input(x, params);
  const std::uint32_t k = 2 * params.d;
  const Grr grr = Grr::make(k, params.inner_epsilon());
  std::vector<double> law(k, 0.0);
  for (std::uint32_t code = 1; code <= k; ++code) {
    const double sampled = x.contains(EventId::from_code(code)) ? 1.0 / params.s : 0.0;
    law[code - 1] = sampled * grr.p + (1.0 - sampled) * grr.q;
  }
  return law;
}

// Per-report debiased contribution to each of the 2d event frequencies,
// indexed by code - 1.
inline void add_contribution(const PrivkvReport& report, const BaselineParams& params, std::span<double> out) {
  const Grr grr = Grr::make(3, params.epsilon);
  const double scale = grr.scale();
  for (const Sign b : {Sign::kMinus, Sign::kPlus}) {
    const double hit = report.response == to_int(b) ? 1.0 : 0.0;
    out[EventId{report.j, b}.code() - 1] += params.d * (hit - grr.q) / scale;
  }
}

inline void add_contribution(const PckvReport& report, const BaselineParams& params, std::span<double> out) {
  const Grr grr = Grr::make(2 * params.d, params.inner_epsilon());
  const double scale = grr.scale();
  const double base = -static_cast<double>(params.s) * grr.q / scale;
  for (auto& v : out) v += base;
  out[report.code - 1] += params.s / scale;
}

template <typename Report>
std::vector<double> baseline_frequency_estimates(std::span<const Report> reports, const BaselineParams& params) {
  params.validate();
  detail::require(!reports.empty(), "no reports to aggregate");
  std::vector<double> out(2 * params.d, 0.0);
  if constexpr (std::is_same_v<Report, PckvReport>) {
    // Counting first keeps the cost at O(n + d).
    detail::require(params.variant != BaselineKind::kPrivKV, "params are not PCKV");
    std::vector<std::uint64_t> counts(2 * params.d, 0);
    for (const auto& r : reports) {
      detail::require(r.code >= 1 && r.code <= 2 * params.d, "report code out of range");
      ++counts[r.code - 1];
    }
    const Grr grr = Grr::make(2 * params.d, params.inner_epsilon());
    const double n = static_cast<double>(reports.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = params.s * (counts[k] / n - grr.q) / grr.scale();
    }
  } else {
    detail::require(params.variant == BaselineKind::kPrivKV, "params are not PrivKV");
    for (const auto& r : reports) {
      detail::require(r.j >= 1 && r.j <= params.d, "report dimension out of range");
      add_contribution(r, params, out);
    }
    for (auto& v : out) v /= static_cast<double>(reports.size());
  }
  return out;
}

}  // namespace sparse_ldp
