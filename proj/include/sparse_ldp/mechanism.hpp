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

#include <cmath>
#include <cstdint>
#include <string>

#include "sparse_ldp/error.hpp"
#include "sparse_ldp/hash.hpp"
#include "sparse_ldp/vector.hpp"

namespace sparse_ldp {

// Shared (d, s, epsilon, t) parameters of the hash-based mechanisms.
// epsilon = 0 is accepted (a 0-LDP, uniform mechanism); estimators reject it
// where their denominators vanish.
struct MechanismParams {
  std::uint32_t d = 1;
  std::uint32_t s = 1;
  double epsilon = 1.0;
  std::uint32_t t = 2;

  void validate() const {
    detail::require(d >= 1, "d must be positive");
    detail::require(s >= 1, "s must be positive");
    detail::require(s <= d, "s must not exceed d");
    detail::require(std::isfinite(epsilon) && epsilon >= 0, "epsilon must be a finite non-negative number");
    detail::require(t >= 1, "t must be positive");
  }

  void check_input(const TernaryVector& x) const {
    detail::require(x.dimension() == d, "input dimension does not match d");
    detail::require(x.sparsity() == s, "input sparsity does not match s");
  }

  friend bool operator==(const MechanismParams&, const MechanismParams&) = default;
};

// One user's sanitized message: the hash it drew and the output symbol.
struct PrivateView {
  UserHash hash;
  std::uint32_t z;

  friend bool operator==(const PrivateView&, const PrivateView&) = default;
};

}  // namespace sparse_ldp
