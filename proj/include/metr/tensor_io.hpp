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

// Binary tensor file, little-endian, no padding:
//
//   offset  size  field
//   0       4     magic "METR"
//   4       2     format version (u16) = 1
//   6       1     dtype (u8): 0 = real f64, 1 = complex f64 (re, im interleaved)
//   7       1     ndim (u8) = 3
//   8       12    dims C, H, W (u32 each)
//   20      ...   payload, f64 row-major

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <variant>
#include <vector>

#include "metr/tensor.hpp"

namespace metr {

inline constexpr std::uint16_t kTensorFormatVersion = 1;
inline constexpr std::size_t kTensorHeaderSize = 20;

using AnyTensor = std::variant<LatentTensor, Spectrum>;

std::vector<std::uint8_t> encode_tensor(const LatentTensor& t);
std::vector<std::uint8_t> encode_tensor(const Spectrum& s);
/// Throws FormatError carrying the offset of the first bad byte.
AnyTensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const LatentTensor& t);
void write_tensor(const std::filesystem::path& path, const Spectrum& s);
AnyTensor read_tensor(const std::filesystem::path& path);
/// Reads a file that must hold a real tensor.
LatentTensor read_latent(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace metr
