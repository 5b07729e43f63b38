// Copyright 2026 The catchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace catchain {

// Hilbert-space dimension above the configured budget.
class SizingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical invariant (norm, trace, hermiticity, positivity, divergence
// guard) was violated beyond its threshold during propagation.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Krotov cannot start: the guess has zero overlap with the target.
class DegenerateStart : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace catchain
