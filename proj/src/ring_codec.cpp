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

#include "metr/ring_codec.hpp"

#include <cmath>
#include <numeric>

#include "metr/fft.hpp"
#include "metr/rng.hpp"

namespace metr {

void WatermarkKey::validate() const {
  if (height == 0 || width == 0) {
    throw InvalidArgument("watermark key: height and width must be positive");
  }
  const auto limit = std::min(height / 2, width / 2);
  if (radius < 1 || static_cast<std::size_t>(radius) >= limit) {
    throw InvalidArgument("watermark key: radius r=" + std::to_string(radius) +
                          " must satisfy 1 <= r < min(H/2, W/2) = " +
                          std::to_string(limit));
  }
  if (!(scaler > 0.0) || !std::isfinite(scaler)) {
    throw InvalidArgument("watermark key: scaler S must be positive");
  }
}

std::size_t RingMask::size() const {
  std::size_t n = 0;
  for (const auto& r : rings) n += r.size();
  return n;
}

std::vector<std::size_t> RingMask::cardinalities() const {
  std::vector<std::size_t> out;
  out.reserve(rings.size());
  for (const auto& r : rings) out.push_back(r.size());
  return out;
}

Message::Message(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw InvalidArgument("message bits must be 0 or 1");
  }
}

Message Message::from_string(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char ch : text) {
    if (ch != '0' && ch != '1') {
      throw InvalidArgument("message string may only contain '0' and '1'");
    }
    bits.push_back(ch == '1' ? 1 : 0);
  }
  return Message(std::move(bits));
}

Message Message::from_integer(std::uint64_t value, std::size_t width) {
  if (width > 64 || (width < 64 && (value >> width) != 0)) {
    throw InvalidArgument("message value does not fit in the given width");
  }
  std::vector<std::uint8_t> bits(width);
  for (std::size_t i = 0; i < width; ++i) {
    bits[i] = static_cast<std::uint8_t>((value >> (width - 1 - i)) & 1U);
  }
  return Message(std::move(bits));
}

Message Message::random(std::size_t width, Rng& rng) {
  std::vector<std::uint8_t> bits(width);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
  return Message(std::move(bits));
}

std::string Message::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

std::uint64_t Message::to_integer() const {
  if (bits_.size() > 64) throw InvalidArgument("message longer than 64 bits");
  std::uint64_t v = 0;
  for (auto b : bits_) v = (v << 1) | b;
  return v;
}

RingMask build_mask(const WatermarkKey& key) {
  key.validate();
  RingMask mask{key.height, key.width,
                std::vector<std::vector<std::size_t>>(key.radius)};
  const auto cy = static_cast<double>(center_index(key.height));
  const auto cx = static_cast<double>(center_index(key.width));
  for (std::size_t y = 0; y < key.height; ++y) {
    for (std::size_t x = 0; x < key.width; ++x) {
      // std::round rounds halves away from zero.
      const double d = std::round(std::hypot(static_cast<double>(y) - cy,
                                             static_cast<double>(x) - cx));
      if (d >= 1.0 && d <= key.radius) {
        mask.rings[static_cast<std::size_t>(d) - 1].push_back(y * key.width + x);
      }
    }
  }
  return mask;
}

WatermarkPattern encode(const Message& msg, const WatermarkKey& key) {
  if (msg.size() != static_cast<std::size_t>(key.radius)) {
    throw InvalidArgument("encode: message length " + std::to_string(msg.size()) +
                          " != radius " + std::to_string(key.radius));
  }
  WatermarkPattern p{key, build_mask(key), {}};
  p.ring_values.reserve(msg.size());
  for (std::size_t i = 0; i < msg.size(); ++i) {
    p.ring_values.push_back(msg[i] ? key.scaler : -key.scaler);
  }
  return p;
}

Spectrum embed(const Spectrum& s, const WatermarkPattern& pattern) {
  const auto& key = pattern.key;
  if (s.height() != key.height || s.width() != key.width ||
      key.channel >= s.channels()) {
    throw InvalidArgument("embed: spectrum shape does not match the key");
  }
  Spectrum out = s;
  auto plane = out.channel(key.channel);
  for (std::size_t r = 0; r < pattern.mask.rings.size(); ++r) {
    for (std::size_t idx : pattern.mask.rings[r]) {
      plane[idx] = {pattern.ring_values[r], 0.0};
    }
  }
  return out;
}

std::vector<double> ring_means(const Spectrum& y, const RingMask& mask,
                               std::size_t channel) {
  if (y.height() != mask.height || y.width() != mask.width ||
      channel >= y.channels()) {
    throw InvalidArgument("ring_means: spectrum shape does not match the mask");
  }
  auto plane = y.channel(channel);
  std::vector<double> means;
  means.reserve(mask.rings.size());
  for (const auto& ring : mask.rings) {
    double sum = 0.0;
    for (std::size_t idx : ring) sum += plane[idx].real();
    means.push_back(sum / static_cast<double>(ring.size()));
  }
  return means;
}

Message decode_bits(const Spectrum& y, const WatermarkKey& key) {
  const auto means = ring_means(y, build_mask(key), key.channel);
  std::vector<std::uint8_t> bits;
  bits.reserve(means.size());
  for (double m : means) bits.push_back(m > 0.0 ? 1 : 0);
  return Message(std::move(bits));
}

std::uint64_t message_capacity(int radius) {
  if (radius < 0 || radius > 63) {
    throw InvalidArgument("message_capacity: radius out of range");
  }
  return std::uint64_t{1} << radius;
}

}  // namespace metr
