// Copyright 2026 The nolace-engine Authors
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

namespace nolace {

// Caller broke a documented precondition (dimension mismatch, lag out of
// range, missing history).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bytes on disk do not form a valid container (bad magic, version, truncation).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Container parsed but its contents do not describe a usable model.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NOLACE_REQUIRE(cond, msg)                                            \
  do {                                                                       \
    if (!(cond)) throw ::nolace::ContractViolation(std::string(msg));        \
  } while (0)

}  // namespace nolace
