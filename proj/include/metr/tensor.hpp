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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "metr/error.hpp"

namespace metr {

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const noexcept { return height * width; }
  std::size_t size() const noexcept { return channels * height * width; }
  bool operator==(const Shape&) const = default;
};

/// Dense C x H x W array, row-major within each channel plane. The shape is
/// fixed at construction.
template <typename T>
class Tensor3 {
 public:
  using value_type = T;

  Tensor3() = default;

  explicit Tensor3(Shape shape, T fill = T{}) : shape_(checked(shape)) {
    data_.assign(shape_.size(), fill);
  }

  Tensor3(Shape shape, std::vector<T> data)
      : shape_(checked(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw InvalidArgument("tensor data length does not match C*H*W");
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  const T& operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  std::span<T> channel(std::size_t c) {
    return std::span<T>(data_).subspan(c * shape_.plane(), shape_.plane());
  }
  std::span<const T> channel(std::size_t c) const {
    return std::span<const T>(data_).subspan(c * shape_.plane(),
                                             shape_.plane());
  }

  bool operator==(const Tensor3&) const = default;

 private:
  static Shape checked(Shape s) {
    if (s.channels == 0 || s.height == 0 || s.width == 0) {
      throw InvalidArgument("tensor dimensions must be positive");
    }
    return s;
  }

  Shape shape_{};
  std::vector<T> data_;
};

/// Real latent noise or decoded image.
using LatentTensor = Tensor3<double>;
/// Complex spectrum in centered layout: DC at (H/2, W/2), integer division.
using Spectrum = Tensor3<std::complex<double>>;

bool all_finite(const LatentTensor& t);
bool all_finite(const Spectrum& s);

double max_abs_diff(const LatentTensor& a, const LatentTensor& b);
double l2_norm(const LatentTensor& t);

}  // namespace metr
