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

#include "metr/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace metr {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (H, W, direction) and kept for the
// life of the process.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t h, std::size_t w, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(h, w, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> in(h * w), out(h * w);
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w),
                                   in.data(), out.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

using Complex = std::complex<double>;

void transform_plane(std::span<const Complex> in, std::span<Complex> out,
                     std::size_t h, std::size_t w, int sign) {
  fftw_plan plan = PlanCache::instance().get(h, w, sign);
  // std::complex<double> is layout-compatible with fftw_complex.
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void require_finite(const Spectrum& s) {
  if (!all_finite(s)) throw InvalidArgument("spectrum has non-finite values");
}

}  // namespace

Spectrum fft2(const LatentTensor& t) {
  if (t.empty()) throw InvalidArgument("fft2: empty tensor");
  if (!all_finite(t)) throw InvalidArgument("fft2: tensor has non-finite values");
  const std::size_t h = t.height(), w = t.width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  const std::size_t cy = center_index(h), cx = center_index(w);

  Spectrum out(t.shape());
  std::vector<Complex> in(h * w), raw(h * w);
  for (std::size_t c = 0; c < t.channels(); ++c) {
    auto plane = t.channel(c);
    for (std::size_t i = 0; i < h * w; ++i) in[i] = Complex(plane[i], 0.0);
    transform_plane(in, raw, h, w, FFTW_FORWARD);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out(c, (y + cy) % h, (x + cx) % w) = raw[y * w + x] * scale;
      }
    }
  }
  return out;
}

Spectrum ifft2_complex(const Spectrum& s) {
  if (s.empty()) throw InvalidArgument("ifft2: empty spectrum");
  require_finite(s);
  const std::size_t h = s.height(), w = s.width();
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  const std::size_t cy = center_index(h), cx = center_index(w);

  Spectrum out(s.shape());
  std::vector<Complex> natural(h * w), raw(h * w);
  for (std::size_t c = 0; c < s.channels(); ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        natural[y * w + x] = s(c, (y + cy) % h, (x + cx) % w);
      }
    }
    transform_plane(natural, raw, h, w, FFTW_BACKWARD);
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < h * w; ++i) dst[i] = raw[i] * scale;
  }
  return out;
}

RealInverse ifft2(const Spectrum& s) {
  Spectrum full = ifft2_complex(s);
  RealInverse result{LatentTensor(s.shape()), 0.0};
  auto dst = result.tensor.values();
  auto src = full.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i].real();
    result.max_imag_residual =
        std::max(result.max_imag_residual, std::abs(src[i].imag()));
  }
  return result;
}

}  // namespace metr
