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

#include "metr/jpeg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "metr/error.hpp"

namespace metr {
namespace {

constexpr std::array<int, 64> kLumaTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// basis[u][x] = alpha(u) * cos((2x + 1) u pi / 16)
std::array<std::array<double, 8>, 8> dct_basis() {
  std::array<std::array<double, 8>, 8> b{};
  for (int u = 0; u < 8; ++u) {
    const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (int x = 0; x < 8; ++x) {
      b[u][x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
  return b;
}

}  // namespace

std::array<int, 64> jpeg_quant_table(int quality) {
  if (quality < 1 || quality > 100) {
    throw InvalidArgument("jpeg quality must be in [1, 100]");
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> q{};
  for (std::size_t i = 0; i < 64; ++i) {
    q[i] = std::clamp((kLumaTable[i] * scale + 50) / 100, 1, 255);
  }
  return q;
}

void jpeg_roundtrip_plane(std::span<double> samples, std::size_t height,
                          std::size_t width, int quality) {
  if (samples.size() != height * width) {
    throw InvalidArgument("jpeg: plane size mismatch");
  }
  static const auto basis = dct_basis();
  const auto table = jpeg_quant_table(quality);
  const std::size_t ph = (height + 7) / 8 * 8;
  const std::size_t pw = (width + 7) / 8 * 8;

  std::vector<double> padded(ph * pw);
  for (std::size_t y = 0; y < ph; ++y) {
    for (std::size_t x = 0; x < pw; ++x) {
      const double v = samples[std::min(y, height - 1) * width + std::min(x, width - 1)];
      padded[y * pw + x] = std::round(v) - 128.0;
    }
  }

  double block[8][8], tmp[8][8], coef[8][8];
  for (std::size_t by = 0; by < ph; by += 8) {
    for (std::size_t bx = 0; bx < pw; bx += 8) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) block[y][x] = padded[(by + y) * pw + bx + x];
      // Forward DCT: rows then columns.
      for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
          double s = 0.0;
          for (int x = 0; x < 8; ++x) s += basis[u][x] * block[y][x];
          tmp[y][u] = s;
        }
      for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
          double s = 0.0;
          for (int y = 0; y < 8; ++y) s += basis[v][y] * tmp[y][u];
          const double q = table[v * 8 + u];
          coef[v][u] = std::round(s / q) * q;
        }
      // Inverse DCT.
      for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
          double s = 0.0;
          for (int u = 0; u < 8; ++u) s += basis[u][x] * coef[v][u];
          tmp[v][x] = s;
        }
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          double s = 0.0;
          for (int v = 0; v < 8; ++v) s += basis[v][y] * tmp[v][x];
          padded[(by + y) * pw + bx + x] = std::clamp(std::round(s + 128.0), 0.0, 255.0);
        }
    }
  }
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) samples[y * width + x] = padded[y * pw + x];
}

}  // namespace metr
