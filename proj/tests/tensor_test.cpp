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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "metr/fft.hpp"
#include "metr/rng.hpp"
#include "metr/tensor.hpp"

namespace metr {
namespace {

using cd = std::complex<double>;

// Centered unitary DFT by direct summation.
cd dft_bin(const LatentTensor& t, std::size_t c, std::size_t ky, std::size_t kx) {
  const double h = double(t.height()), w = double(t.width());
  const double fy = double(ky) - double(t.height() / 2);
  const double fx = double(kx) - double(t.width() / 2);
  cd sum = 0.0;
  for (std::size_t y = 0; y < t.height(); ++y) {
    for (std::size_t x = 0; x < t.width(); ++x) {
      const double ph = -2.0 * std::numbers::pi * (fy * double(y) / h + fx * double(x) / w);
      sum += t(c, y, x) * cd(std::cos(ph), std::sin(ph));
    }
  }
  return sum / std::sqrt(h * w);
}

TEST(TensorTest, RejectsZeroDimensions) {
  EXPECT_THROW(LatentTensor(Shape{0, 4, 4}), InvalidArgument);
  EXPECT_THROW(LatentTensor(Shape{1, 4, 4}, std::vector<double>(15)), InvalidArgument);
}

TEST(FftTest, ConstantIsDcOnly) {
  LatentTensor t(Shape{1, 4, 4}, 1.5);
  const Spectrum s = fft2(t);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      const cd expect = (y == 2 && x == 2) ? cd(6.0, 0.0) : cd(0.0, 0.0);
      EXPECT_NEAR(std::abs(s(0, y, x) - expect), 0.0, 1e-12);
    }
  }
}

TEST(FftTest, ImpulseIsFlat) {
  LatentTensor t(Shape{1, 4, 4});
  t(0, 0, 0) = 1.0;
  const Spectrum s = fft2(t);
  for (auto v : s.values()) EXPECT_NEAR(std::abs(v), 0.25, 1e-12);
}

TEST(FftTest, MatchesDirectSummation) {
  for (Shape shape : {Shape{2, 6, 5}, Shape{1, 7, 8}}) {
    Rng rng(11);
    const LatentTensor t = sample_gaussian(rng, shape);
    const Spectrum s = fft2(t);
    for (std::size_t c = 0; c < shape.channels; ++c) {
      for (std::size_t y = 0; y < shape.height; ++y) {
        for (std::size_t x = 0; x < shape.width; ++x) {
          EXPECT_NEAR(std::abs(s(c, y, x) - dft_bin(t, c, y, x)), 0.0, 1e-12);
        }
      }
    }
  }
}

TEST(FftTest, ParsevalAndRoundTrip) {
  Rng rng(7);
  const LatentTensor t = sample_gaussian(rng, Shape{1, 8, 8});
  const Spectrum s = fft2(t);
  double e_t = 0.0, e_s = 0.0;
  for (double v : t.values()) e_t += v * v;
  for (cd v : s.values()) e_s += std::norm(v);
  EXPECT_NEAR(e_t, e_s, 1e-10);

  Rng rng2(3);
  const LatentTensor u = sample_gaussian(rng2, Shape{1, 16, 16});
  const RealInverse back = ifft2(fft2(u));
  EXPECT_LT(max_abs_diff(back.tensor, u), 1e-10);
  EXPECT_LT(back.max_imag_residual, 1e-10);

  Rng rng3(4);
  const LatentTensor big = sample_gaussian(rng3, Shape{4, 128, 128});
  EXPECT_LT(max_abs_diff(ifft2(fft2(big)).tensor, big), 1e-10);
}

TEST(FftTest, OffCenterBinResidualMatchesDirectInverse) {
  Spectrum s(Shape{1, 8, 8});
  s(0, 1, 6) = 1.0;
  // Inverse of a single bin at frequency (fy, fx): e^{2 pi i (fy y/8 + fx x/8)} / 8.
  const double fy = 1.0 - 4.0, fx = 6.0 - 4.0;
  double oracle = 0.0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double ph = 2.0 * std::numbers::pi * (fy * y / 8.0 + fx * x / 8.0);
      oracle = std::max(oracle, std::abs(std::sin(ph) / 8.0));
    }
  }
  const RealInverse inv = ifft2(s);
  EXPECT_GT(inv.max_imag_residual, 0.1);
  EXPECT_NEAR(inv.max_imag_residual, oracle, 1e-12);
}

TEST(FftTest, OddSizesCenterAtFloorHalf) {
  LatentTensor t(Shape{1, 5, 7}, 1.0);
  const Spectrum s = fft2(t);
  EXPECT_NEAR(s(0, 2, 3).real(), std::sqrt(35.0), 1e-12);
  EXPECT_LT(max_abs_diff(ifft2(s).tensor, t), 1e-12);
}

TEST(FftTest, RejectsNonFinite) {
  LatentTensor t(Shape{1, 4, 4});
  t(0, 1, 1) = std::nan("");
  EXPECT_THROW(fft2(t), InvalidArgument);
}

TEST(RngTest, GaussianMoments) {
  Rng rng(0);
  const LatentTensor t = sample_gaussian(rng, Shape{1, 64, 64});
  double m = 0.0, v = 0.0;
  for (double x : t.values()) m += x;
  m /= double(t.size());
  for (double x : t.values()) v += (x - m) * (x - m);
  v /= double(t.size() - 1);
  EXPECT_NEAR(m, 0.0, 0.05);
  EXPECT_NEAR(v, 1.0, 0.1);
}

TEST(RngTest, Deterministic) {
  Rng a(42), b(42);
  EXPECT_EQ(sample_gaussian(a, Shape{1, 16, 16}), sample_gaussian(b, Shape{1, 16, 16}));

  Rng s0(0), s1(1);
  const LatentTensor t0 = sample_gaussian(s0, Shape{1, 64, 64});
  const LatentTensor t1 = sample_gaussian(s1, Shape{1, 64, 64});
  std::size_t differ = 0;
  for (std::size_t i = 0; i < t0.size(); ++i) differ += t0.values()[i] != t1.values()[i];
  EXPECT_GT(double(differ), 0.99 * double(t0.size()));
}

TEST(RngTest, DocumentedStream) {
  // First output is mix64(seed + golden ratio increment).
  Rng rng(5);
  EXPECT_EQ(rng.next_u64(), Rng::mix64(5 + 0x9E3779B97F4A7C15ULL));
  EXPECT_EQ(rng.next_u64(), Rng::mix64(5 + 2 * 0x9E3779B97F4A7C15ULL));

  // SplitMix64 finalizer reference value for input 0 after one increment.
  EXPECT_EQ(Rng::mix64(0x9E3779B97F4A7C15ULL), 0xE220A8397B1DCDAFULL);
}

TEST(RngTest, ForkDoesNotAdvanceParent) {
  Rng a(9), b(9);
  (void)a.fork(3);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng f1 = Rng(9).fork(3), f2 = Rng(9).fork(3), f3 = Rng(9).fork(4);
  EXPECT_EQ(f1.next_u64(), f2.next_u64());
  EXPECT_NE(Rng(9).fork(3).next_u64(), f3.next_u64());
}

TEST(RngTest, UniformIndexInRange) {
  Rng rng(1);
  std::vector<int> counts(7);
  for (int i = 0; i < 7000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

}  // namespace
}  // namespace metr
