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

#include <cstdint>
#include <optional>

#include "metr/tensor.hpp"

namespace metr {

/// Counter-based SplitMix64 generator.
///
/// The k-th 64-bit output (k = 1, 2, ...) is `mix64(seed + k * 0x9E3779B97F4A7C15)`
/// where `mix64` is the SplitMix64 finalizer. Uniform doubles take the top 53
/// bits. Gaussian samples use the Box-Muller transform on two consecutive
/// uniforms u1 in (0, 1], u2 in [0, 1):
///   z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
/// and are emitted in that order. Only integer arithmetic and libm
/// log/sqrt/cos/sin are involved, so a seed gives the same stream on every
/// IEEE-754 platform with a correctly rounded libm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  double gaussian() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent generator for a numbered sub-stream. Pure function of the
  /// parent seed and `stream`; does not advance the parent.
  Rng fork(std::uint64_t stream) const noexcept;

  static std::uint64_t mix64(std::uint64_t z) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

/// I.i.d. standard normal tensor.
LatentTensor sample_gaussian(Rng& rng, Shape shape);

}  // namespace metr
