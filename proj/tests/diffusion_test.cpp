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

#include "metr/diffusion.hpp"
#include "metr/fft.hpp"
#include "metr/rng.hpp"

namespace metr {
namespace {

const Shape kShape{1, 64, 64};

// Scalar DDIM sampling and inversion for eps = c_t * x.
double scalar_sample(double x, const std::vector<double>& c, const AlphaSchedule& s) {
  for (int t = s.steps(); t >= 1; --t) {
    const double e = c[std::size_t(t - 1)] * x;
    const double x0 = (x - std::sqrt(1.0 - s[t]) * e) / std::sqrt(s[t]);
    x = std::sqrt(s[t - 1]) * x0 + std::sqrt(1.0 - s[t - 1]) * e;
  }
  return x;
}

double scalar_invert(double x, const std::vector<double>& c, const AlphaSchedule& s) {
  for (int t = 0; t < s.steps(); ++t) {
    const double e = c[std::size_t(std::max(t, 1) - 1)] * x;
    const double x0 = (x - std::sqrt(1.0 - s[t]) * e) / std::sqrt(s[t]);
    x = std::sqrt(s[t + 1]) * x0 + std::sqrt(1.0 - s[t + 1]) * e;
  }
  return x;
}

std::vector<double> ramp(int steps, double top) {
  std::vector<double> c(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) c[std::size_t(t - 1)] = top * t / steps;
  return c;
}

double rel_error(const LatentTensor& a, const LatentTensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a.values()[i] - b.values()[i]) * (a.values()[i] - b.values()[i]);
    den += b.values()[i] * b.values()[i];
  }
  return std::sqrt(num / den);
}

TEST(ScheduleTest, Products) {
  EXPECT_NEAR(make_schedule(1, 0.1, 0.1)[1], 0.9, 1e-15);
  const AlphaSchedule s = make_schedule(40);
  ASSERT_EQ(s.steps(), 40);
  double prod = 1.0;
  EXPECT_EQ(s[0], 1.0);
  for (int t = 1; t <= 40; ++t) {
    prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 39.0);
    EXPECT_NEAR(s[t], prod, 1e-15);
    EXPECT_LT(s[t], s[t - 1]);
  }
  EXPECT_THROW(make_schedule(40, 1e-4, 1.0), InvalidArgument);
  EXPECT_THROW(make_schedule(0), InvalidArgument);
  EXPECT_THROW(make_schedule(10, 0.02, 0.01), InvalidArgument);
  EXPECT_THROW(make_schedule(10, 0.0, 0.01), InvalidArgument);
}

TEST(ForwardNoiseTest, Formula) {
  const AlphaSchedule s = make_schedule(10);
  Rng rng(3);
  const LatentTensor x0 = sample_gaussian(rng, Shape{1, 8, 8});
  const LatentTensor eps = sample_gaussian(rng, Shape{1, 8, 8});
  EXPECT_EQ(forward_noise(x0, eps, 0, s), x0);
  const LatentTensor xt = forward_noise(x0, eps, 5, s);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double expect = std::sqrt(s[5]) * x0.values()[i] + std::sqrt(1.0 - s[5]) * eps.values()[i];
    EXPECT_NEAR(xt.values()[i], expect, 1e-12);
  }
  const LatentTensor from_zero = forward_noise(LatentTensor(Shape{1, 8, 8}), eps, 5, s);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_NEAR(from_zero.values()[i], std::sqrt(1.0 - s[5]) * eps.values()[i], 1e-15);
  }
  EXPECT_THROW(forward_noise(x0, LatentTensor(Shape{1, 4, 4}), 5, s), InvalidArgument);
  EXPECT_THROW(forward_noise(x0, eps, 11, s), InvalidArgument);
}

TEST(DenoiseTest, PredictorVariants) {
  const AlphaSchedule s = make_schedule(40);
  Rng rng(4);
  const LatentTensor xt = sample_gaussian(rng, Shape{1, 8, 8});
  const LatentTensor zero = ddim_denoise_estimate(xt, 7, ZeroPredictor{}, s);
  for (std::size_t i = 0; i < xt.size(); ++i) {
    EXPECT_NEAR(zero.values()[i], xt.values()[i] / std::sqrt(s[7]), 1e-15);
  }
  const LinearPredictor lin{std::vector<double>(40, 0.0)};
  EXPECT_EQ(ddim_denoise_estimate(xt, 7, lin, s), zero);

  const GaussianPriorPredictor prior = make_gaussian_prior(Shape{1, 8, 8}, 1.0, 3.0, 1.0, 9);
  LatentTensor at_mode(Shape{1, 8, 8});
  for (std::size_t i = 0; i < at_mode.size(); ++i) {
    at_mode.values()[i] = std::sqrt(s[12]) * prior.mean.values()[i];
  }
  EXPECT_LT(max_abs_diff(ddim_denoise_estimate(at_mode, 12, prior, s), prior.mean), 1e-12);
}

TEST(SampleTest, ZeroPredictorClosedForm) {
  const AlphaSchedule s = make_schedule(40);
  Rng rng(5);
  const LatentTensor xT = sample_gaussian(rng, kShape);
  const LatentTensor x0 = ddim_sample(xT, ZeroPredictor{}, s);
  for (std::size_t i = 0; i < xT.size(); ++i) {
    EXPECT_NEAR(x0.values()[i], xT.values()[i] / std::sqrt(s[40]), 1e-12);
  }
  EXPECT_EQ(ddim_sample(xT, ZeroPredictor{}, s), x0);
  EXPECT_LT(max_abs_diff(ddim_invert(x0, ZeroPredictor{}, s), xT), 1e-9);
}

TEST(SampleTest, LinearMatchesScalarOracle) {
  for (int steps : {5, 40}) {
    const AlphaSchedule s = make_schedule(steps);
    const std::vector<double> c = ramp(steps, 0.3);
    const LinearPredictor pred{c};
    LatentTensor one(Shape{1, 1, 1}, 1.0);
    EXPECT_NEAR(ddim_sample(one, pred, s).values()[0], scalar_sample(1.0, c, s), 1e-12);

    Rng rng(6);
    const LatentTensor xT = sample_gaussian(rng, kShape);
    const LatentTensor back = ddim_invert(ddim_sample(xT, pred, s), pred, s);
    const double gain = scalar_invert(scalar_sample(1.0, c, s), c, s);
    double worst = 0.0, err = 0.0;
    for (std::size_t i = 0; i < xT.size(); ++i) {
      const double v = xT.values()[i];
      worst = std::max(worst, std::abs((back.values()[i] - v) - (gain - 1.0) * v));
      err = std::max(err, std::abs(back.values()[i] - v));
    }
    EXPECT_LT(worst, 1e-12) << steps;
    EXPECT_GT(err, 1e-6) << steps;
  }
}

TEST(InvertTest, GaussianPriorRoundTrip) {
  const AlphaSchedule s = make_schedule(40);
  const GaussianPriorPredictor prior = make_gaussian_prior(kShape, 1.0, 0.0);
  Rng rng(0);
  const LatentTensor xT = sample_gaussian(rng, kShape);
  const double err = rel_error(ddim_invert(ddim_sample(xT, prior, s), prior, s), xT);
  EXPECT_LT(err, 0.15);
  EXPECT_GT(err, 0.0);
}

TEST(InvertTest, ErrorGrowsWithPriorMismatch) {
  const AlphaSchedule s = make_schedule(40);
  Rng rng(1);
  const LatentTensor xT = sample_gaussian(rng, kShape);
  double prev = -1.0;
  for (double amp : {0.0, 1750.0, 3500.0}) {
    const GaussianPriorPredictor prior = make_gaussian_prior(kShape, 1.0, amp);
    const double err = rel_error(ddim_invert(ddim_sample(xT, prior, s), prior, s), xT);
    EXPECT_GE(err, prev) << amp;
    prev = err;
  }
}

TEST(PriorContentTest, BandAndScale) {
  const LatentTensor mu = make_prior_content(kShape, 50.0, 14.0, 3);
  double sq = 0.0, mean = 0.0;
  for (double v : mu.values()) mean += v;
  for (double v : mu.values()) sq += v * v;
  EXPECT_NEAR(mean / double(mu.size()), 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(sq / double(mu.size())), 50.0, 1e-9);
  const Spectrum spec = fft2(mu);
  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x < 64; ++x) {
      if (std::hypot(double(y) - 32.0, double(x) - 32.0) < 14.0) {
        EXPECT_LT(std::abs(spec(0, y, x)), 1e-9);
      }
    }
  }
  EXPECT_THROW(make_gaussian_prior(kShape, 0.0), InvalidArgument);
}

TEST(PipelineTest, ZeroPredictorRecoversMessage) {
  const AlphaSchedule s = make_schedule(40);
  WatermarkKey key;
  Rng rng(0);
  const Message msg = Message::from_string("1001110101");
  const Generation g = generate_watermarked(rng, kShape, key, msg, ZeroPredictor{}, s);
  EXPECT_LT(g.max_imag_residual, 1e-6);
  const DetectionReport r = detect_message(g.image, key, ZeroPredictor{}, s, 0.01, &msg);
  EXPECT_TRUE(r.present);
  EXPECT_EQ(r.bits, msg);
  EXPECT_FALSE(r.reference_from_decoded);
  EXPECT_LT(r.detection_distance, 1e-6);
}

TEST(PipelineTest, UnmaskedBinsIndependentOfMessage) {
  const AlphaSchedule s = make_schedule(40);
  WatermarkKey key;
  Rng a(3), b(3);
  const Generation g1 = generate_watermarked(a, kShape, key, Message::from_string("0000000000"),
                                             ZeroPredictor{}, s);
  const Generation g2 = generate_watermarked(b, kShape, key, Message::from_string("1111111111"),
                                             ZeroPredictor{}, s);
  const Spectrum f1 = fft2(g1.noise_wm), f2 = fft2(g2.noise_wm);
  const RingMask mask = build_mask(key);
  std::vector<bool> masked(64 * 64, false);
  for (const auto& ring : mask.rings) {
    for (std::size_t idx : ring) masked[idx] = true;
  }
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (!masked[i]) EXPECT_LT(std::abs(f1.values()[i] - f2.values()[i]), 1e-9);
  }
  EXPECT_NE(g1.image, g2.image);
}

TEST(PipelineTest, GaussianPriorCleanBitAccuracy) {
  const AlphaSchedule s = make_schedule(40);
  const GaussianPriorPredictor prior = make_gaussian_prior(kShape);
  WatermarkKey key;
  Rng rng(0);
  int wrong = 0;
  for (int i = 0; i < 100; ++i) {
    const Message msg = Message::random(10, rng);
    const Generation g = generate_watermarked(rng, kShape, key, msg, prior, s);
    const Message got = decode_bits(recover_spectrum(g.image, prior, s), key);
    for (std::size_t b = 0; b < 10; ++b) wrong += got[b] != msg[b];
  }
  EXPECT_EQ(wrong, 0);
}

TEST(PipelineTest, PlainFalsePositiveRate) {
  const AlphaSchedule s = make_schedule(40);
  WatermarkKey key;
  Rng rng(77);
  int positives = 0;
  for (int i = 0; i < 1000; ++i) {
    const Message ref = Message::random(10, rng);
    const LatentTensor img = ddim_sample(sample_gaussian(rng, kShape), ZeroPredictor{}, s);
    positives += detect_message(img, key, ZeroPredictor{}, s, 0.01, &ref).present;
  }
  // Binomial(1000, 0.01): mean 10, sd about 3.1.
  EXPECT_LE(positives, 25);
}

TEST(PipelineTest, AllZeroImageIsDegenerateNotFatal) {
  const AlphaSchedule s = make_schedule(40);
  WatermarkKey key;
  const LatentTensor zeros(kShape);
  const DetectionReport a = detect_message(zeros, key, ZeroPredictor{}, s, 0.01);
  const DetectionReport b = detect_message(zeros, key, ZeroPredictor{}, s, 0.01);
  EXPECT_FALSE(a.statistic.has_value());
  EXPECT_FALSE(a.statistic_error.empty());
  EXPECT_FALSE(a.present);
  EXPECT_EQ(a.p_value_or_one(), 1.0);
  EXPECT_TRUE(a.reference_from_decoded);
  EXPECT_EQ(a.bits, b.bits);
  EXPECT_EQ(a.bits.to_string(), "0000000000");
}

}  // namespace
}  // namespace metr
