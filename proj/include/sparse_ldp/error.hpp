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

#include <stdexcept>
#include <string>

namespace sparse_ldp {

// Raised when mechanism or query parameters fall outside their valid domain.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an exact enumeration would exceed its size guard.
class SizeLimitError : public std::length_error {
 public:
  explicit SizeLimitError(const std::string& what) : std::length_error(what) {}
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ParameterError(message);
}

}  // namespace detail
}  // namespace sparse_ldp
