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

#include "metr/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <system_error>

namespace metr {
namespace {

constexpr std::uint8_t kMagic[4] = {'M', 'E', 'T', 'R'};
constexpr std::uint8_t kDtypeReal = 0;
constexpr std::uint8_t kDtypeComplex = 1;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

template <typename U>
U get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(in[offset + i]) << (8 * i);
  }
  return v;
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  put_le(out, std::bit_cast<std::uint64_t>(d));
}

std::vector<std::uint8_t> header(const Shape& s, std::uint8_t dtype) {
  constexpr auto kMaxDim = std::numeric_limits<std::uint32_t>::max();
  if (s.channels > kMaxDim || s.height > kMaxDim || s.width > kMaxDim) {
    throw InvalidArgument("tensor dimension does not fit in u32");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kTensorFormatVersion);
  out.push_back(dtype);
  out.push_back(3);
  put_le(out, static_cast<std::uint32_t>(s.channels));
  put_le(out, static_cast<std::uint32_t>(s.height));
  put_le(out, static_cast<std::uint32_t>(s.width));
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const LatentTensor& t) {
  auto out = header(t.shape(), kDtypeReal);
  out.reserve(out.size() + 8 * t.size());
  for (double v : t.values()) put_f64(out, v);
  return out;
}

std::vector<std::uint8_t> encode_tensor(const Spectrum& s) {
  auto out = header(s.shape(), kDtypeComplex);
  out.reserve(out.size() + 16 * s.size());
  for (const auto& v : s.values()) {
    put_f64(out, v.real());
    put_f64(out, v.imag());
  }
  return out;
}

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic, expected \"METR\"", 0);
  }
  if (bytes.size() < kTensorHeaderSize) {
    throw FormatError("truncated header", bytes.size());
  }
  if (get_le<std::uint16_t>(bytes, 4) != kTensorFormatVersion) {
    throw FormatError("unsupported format version", 4);
  }
  const std::uint8_t dtype = bytes[6];
  if (dtype != kDtypeReal && dtype != kDtypeComplex) {
    throw FormatError("unknown dtype", 6);
  }
  if (bytes[7] != 3) throw FormatError("ndim must be 3", 7);

  Shape shape{get_le<std::uint32_t>(bytes, 8), get_le<std::uint32_t>(bytes, 12),
              get_le<std::uint32_t>(bytes, 16)};
  if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
    throw FormatError("zero dimension", 8);
  }
  const std::size_t per_value = dtype == kDtypeReal ? 8 : 16;
  const std::size_t limit = std::numeric_limits<std::size_t>::max() / per_value;
  if (shape.channels > limit / shape.height ||
      shape.channels * shape.height > limit / shape.width) {
    throw FormatError("dimension product overflows", 8);
  }
  const std::size_t payload = shape.size() * per_value;
  const std::size_t available = bytes.size() - kTensorHeaderSize;
  if (available < payload) {
    throw FormatError("truncated payload", bytes.size());
  }
  if (available > payload) {
    throw FormatError("trailing bytes after payload", kTensorHeaderSize + payload);
  }

  auto f64_at = [&](std::size_t i) {
    return std::bit_cast<double>(
        get_le<std::uint64_t>(bytes, kTensorHeaderSize + 8 * i));
  };
  if (dtype == kDtypeReal) {
    LatentTensor t(shape);
    auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f64_at(i);
    return t;
  }
  Spectrum s(shape);
  auto v = s.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = {f64_at(2 * i), f64_at(2 * i + 1)};
  }
  return s;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_tensor(const std::filesystem::path& path, const LatentTensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

void write_tensor(const std::filesystem::path& path, const Spectrum& s) {
  write_file_atomic(path, encode_tensor(s));
}

AnyTensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file(path));
}

LatentTensor read_latent(const std::filesystem::path& path) {
  auto any = read_tensor(path);
  if (auto* t = std::get_if<LatentTensor>(&any)) return std::move(*t);
  throw FormatError("expected a real tensor in " + path.string(), 6);
}

}  // namespace metr
