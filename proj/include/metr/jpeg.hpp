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

#include <array>
#include <cstddef>
#include <span>

namespace metr {

/// IJG luminance quantization table scaled for `quality` in [1, 100],
/// row-major over the 8x8 block.
std::array<int, 64> jpeg_quant_table(int quality);

/// Lossy core of baseline JPEG on one 8-bit plane: level shift, 8x8
/// orthonormal DCT, quantize/dequantize, inverse DCT, round and clamp to
/// [0, 255]. Edges are padded by replication to a multiple of 8. Entropy
/// coding is lossless and skipped.
void jpeg_roundtrip_plane(std::span<double> samples, std::size_t height,
                          std::size_t width, int quality);

}  // namespace metr
