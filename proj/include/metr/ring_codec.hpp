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
#include <string>
#include <string_view>
#include <vector>

#include "metr/tensor.hpp"

namespace metr {

/// Ring geometry and strength of a METR watermark.
struct WatermarkKey {
  int radius = 10;        ///< number of rings == message bits
  double scaler = 100.0;  ///< magnitude written into every ring bin
  std::size_t channel = 0;
  std::size_t height = 64;
  std::size_t width = 64;

  /// Throws InvalidArgument naming the violated constraint.
  void validate() const;
  bool operator==(const WatermarkKey&) const = default;
};

/// Concentric rings around the spectrum center. `rings[i]` holds the flat
/// plane indices (y * W + x) of bins at rounded distance i + 1.
struct RingMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::vector<std::size_t>> rings;

  std::size_t size() const;  ///< |M|
  std::vector<std::size_t> cardinalities() const;
};

/// Bit vector; bit i is carried by ring i + 1.
class Message {
 public:
  Message() = default;
  explicit Message(std::vector<std::uint8_t> bits);

  /// Parses "1010..." (first character is bit 0).
  static Message from_string(std::string_view text);
  /// `width` bits of `value`, most significant first.
  static Message from_integer(std::uint64_t value, std::size_t width);
  static Message random(std::size_t width, class Rng& rng);

  std::string to_string() const;
  std::uint64_t to_integer() const;

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  bool operator==(const Message&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Per-ring real values (+S for bit 1, -S for bit 0) over the key's mask.
/// Imaginary parts are zero by construction.
struct WatermarkPattern {
  WatermarkKey key;
  RingMask mask;
  std::vector<double> ring_values;
};

RingMask build_mask(const WatermarkKey& key);
WatermarkPattern encode(const Message& msg, const WatermarkKey& key);

/// Copy of `s` with the masked bins of `pattern.key.channel` overwritten.
Spectrum embed(const Spectrum& s, const WatermarkPattern& pattern);

/// Mean of Re(y) over each ring on the key's channel.
std::vector<double> ring_means(const Spectrum& y, const RingMask& mask,
                               std::size_t channel);

/// bit = 1 iff the ring mean is strictly positive.
Message decode_bits(const Spectrum& y, const WatermarkKey& key);

/// Number of distinct messages for a radius, 2^r.
std::uint64_t message_capacity(int radius);

}  // namespace metr
