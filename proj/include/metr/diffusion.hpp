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

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metr/detection_stats.hpp"
#include "metr/ring_codec.hpp"
#include "metr/rng.hpp"
#include "metr/tensor.hpp"

namespace metr {

/// Cumulative noise schedule. alpha_bar[0] == 1 and the sequence strictly
/// decreases to alpha_bar[T] > 0.
struct AlphaSchedule {
  std::vector<double> alpha_bar;

  int steps() const noexcept { return static_cast<int>(alpha_bar.size()) - 1; }
  double operator[](int t) const { return alpha_bar.at(static_cast<std::size_t>(t)); }
};

/// Linear betas from beta_start to beta_end over `steps`, alpha_bar_t the
/// running product of (1 - beta).
AlphaSchedule make_schedule(int steps, double beta_start = 1e-4,
                            double beta_end = 0.02);

// Analytic noise predictors standing in for a trained network.

/// eps(x, t) = 0. Sampling and inversion are exact inverses.
struct ZeroPredictor {};

/// eps(x, t) = c_t * x, coefficients[t - 1] for t = 1..T.
struct LinearPredictor {
  std::vector<double> coefficients;
};

/// Posterior-mean denoiser for the prior x0 ~ N(mean, variance * I):
///   E[x0 | x_t] = mean + sqrt(ab) v / (ab v + 1 - ab) * (x_t - sqrt(ab) mean)
///   eps(x_t, t) = (x_t - sqrt(ab) E[x0 | x_t]) / sqrt(1 - ab)
struct GaussianPriorPredictor {
  LatentTensor mean;
  double variance = 1.0;
};

using EpsilonPredictor =
    std::variant<ZeroPredictor, LinearPredictor, GaussianPriorPredictor>;

std::string predictor_name(const EpsilonPredictor& pred);

/// Throws InvalidArgument if the predictor cannot run on `shape` under
/// `sched` (coefficient count, prior-mean shape, variance sign).
void validate_predictor(const EpsilonPredictor& pred, const AlphaSchedule& sched,
                        const Shape& shape);

LatentTensor predict_noise(const EpsilonPredictor& pred, const LatentTensor& xt,
                           int t, const AlphaSchedule& sched);

/// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, for 0 <= t <= T.
LatentTensor forward_noise(const LatentTensor& x0, const LatentTensor& eps,
                           int t, const AlphaSchedule& sched);

/// (x_t - sqrt(1 - ab_t) eps(x_t, t)) / sqrt(ab_t), t >= 1.
LatentTensor ddim_denoise_estimate(const LatentTensor& xt, int t,
                                   const EpsilonPredictor& pred,
                                   const AlphaSchedule& sched);

/// Deterministic DDIM from step T down to 0.
LatentTensor ddim_sample(const LatentTensor& xT, const EpsilonPredictor& pred,
                         const AlphaSchedule& sched);
/// Same recurrence, starting at an intermediate step.
LatentTensor ddim_sample_from(const LatentTensor& xt, int t_start,
                              const EpsilonPredictor& pred,
                              const AlphaSchedule& sched);

/// DDIM inversion, steps t = 0..T-1:
///   x_{t+1} = sqrt(ab_{t+1}) x0'(t) + sqrt(1 - ab_{t+1}) eps(x_t, max(t, 1))
/// where x0'(t) uses ab_t (so x0'(0) = x_0).
LatentTensor ddim_invert(const LatentTensor& x0, const EpsilonPredictor& pred,
                         const AlphaSchedule& sched);

/// Prior-mean "content" for the gaussian-prior predictor: per channel, a
/// random-phase field with 1/|k| amplitude on frequencies |k| >= min_radius
/// (none below), scaled to standard deviation `amplitude`.
LatentTensor make_prior_content(Shape shape, double amplitude,
                                double min_radius, std::uint64_t seed);

inline constexpr double kDefaultContentAmplitude = 3500.0;
inline constexpr double kDefaultContentMinRadius = 14.0;
inline constexpr std::uint64_t kDefaultContentSeed = 1;

/// Gaussian-prior predictor whose mean is make_prior_content(...).
GaussianPriorPredictor make_gaussian_prior(
    Shape shape, double variance = 1.0,
    double amplitude = kDefaultContentAmplitude,
    double min_radius = kDefaultContentMinRadius,
    std::uint64_t seed = kDefaultContentSeed);

struct Generation {
  LatentTensor noise;     ///< x_T
  LatentTensor noise_wm;  ///< x_T with the ring pattern embedded
  LatentTensor image;     ///< ddim_sample(noise_wm)
  double max_imag_residual = 0.0;
};

/// Embeds the pattern into the Fourier transform of `noise` and returns the
/// real part of the inverse transform.
LatentTensor watermark_noise(const LatentTensor& noise,
                             const WatermarkPattern& pattern,
                             double* max_imag_residual = nullptr);

Generation generate_watermarked(Rng& rng, Shape shape, const WatermarkKey& key,
                                const Message& msg, const EpsilonPredictor& pred,
                                const AlphaSchedule& sched);

/// fft2(ddim_invert(image)).
Spectrum recover_spectrum(const LatentTensor& image, const EpsilonPredictor& pred,
                          const AlphaSchedule& sched);

struct DetectionReport {
  /// Missing when the test could not be formed; `statistic_error` says why.
  std::optional<DetectionStatistic> statistic;
  std::string statistic_error;
  bool present = false;  ///< p < p0
  double p0 = kDefaultPresenceThreshold;
  Message bits;
  /// True when no reference message was supplied and the test was run
  /// against the decoded bits. Such p-values are biased low under H0.
  bool reference_from_decoded = false;
  double detection_distance = 0.0;
  std::vector<double> ring_means;

  /// p-value, or 1 when the statistic is unavailable.
  double p_value_or_one() const {
    return statistic ? statistic->p_value : 1.0;
  }
};

/// Decodes bits and runs the p-value test on a recovered spectrum. The test
/// compares against `reference` when given, else against the decoded bits.
DetectionReport analyze_spectrum(const Spectrum& y, const WatermarkKey& key,
                                 double p0, const Message* reference = nullptr);

DetectionReport detect_message(const LatentTensor& image, const WatermarkKey& key,
                               const EpsilonPredictor& pred,
                               const AlphaSchedule& sched, double p0,
                               const Message* reference = nullptr);

}  // namespace metr
