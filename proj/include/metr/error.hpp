// Copyright 2026 The METR Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metr {

/// Raised for precondition violations on arguments (bad dims, out-of-range
/// parameters, length mismatches).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed tensor file. `offset()` is the byte position where decoding
/// failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) +
                           ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Statistic cannot be formed from the input (e.g. zero variance estimate).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The g-criterion denominator k*S^2 + b*S is not positive.
class CriterionUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine hit a hard iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Manifest and tensor files on disk do not line up.
class PairingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metr
