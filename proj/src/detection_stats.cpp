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

#include "metr/detection_stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace metr {
namespace {

constexpr double kTailTolerance = 0.5e-12;
constexpr int kMaxSeriesTerms = 100000;

template <typename Fn>
void for_each_masked(const Spectrum& y, const WatermarkPattern& pattern,
                     Fn&& fn) {
  const auto& key = pattern.key;
  if (y.height() != key.height || y.width() != key.width ||
      key.channel >= y.channels()) {
    throw InvalidArgument("spectrum shape does not match the watermark key");
  }
  auto plane = y.channel(key.channel);
  for (std::size_t r = 0; r < pattern.mask.rings.size(); ++r) {
    const std::complex<double> wm(pattern.ring_values[r], 0.0);
    for (std::size_t idx : pattern.mask.rings[r]) fn(wm, plane[idx]);
  }
}

}  // namespace

double estimate_sigma_sq(const Spectrum& y, const RingMask& mask,
                         std::size_t channel) {
  const std::size_t n = mask.size();
  if (n == 0) throw InvalidArgument("estimate_sigma_sq: empty mask");
  if (y.height() != mask.height || y.width() != mask.width ||
      channel >= y.channels()) {
    throw InvalidArgument("estimate_sigma_sq: shape mismatch");
  }
  auto plane = y.channel(channel);
  double sum = 0.0;
  for (const auto& ring : mask.rings) {
    for (std::size_t idx : ring) sum += std::norm(plane[idx]);
  }
  return sum / static_cast<double>(n);
}

double ncx2_cdf(int dof, double lambda, double z) {
  using boost::math::gamma_p;
  using boost::math::gamma_p_derivative;

  if (dof <= 0) throw InvalidArgument("ncx2_cdf: dof must be positive");
  if (!std::isfinite(lambda) || lambda < 0.0 || std::isnan(z)) {
    throw InvalidArgument("ncx2_cdf: lambda must be finite and >= 0");
  }
  if (z <= 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;

  const double a = 0.5 * dof;
  const double x = 0.5 * z;
  if (lambda == 0.0) return gamma_p(a, x);

  const double mu = 0.5 * lambda;
  const double mode = std::floor(mu);

  // Poisson weight e^-mu mu^j / j! is gamma_p_derivative(j + 1, mu).
  const double w_mode = gamma_p_derivative(mode + 1.0, mu);
  const double p_mode = gamma_p(a + mode, x);
  // log of x^(a+j) e^-x / Gamma(a+j+1), the step between consecutive P terms.
  const double log_x = std::log(x);
  const double log_t_mode =
      (a + mode) * log_x - x - std::lgamma(a + mode + 1.0);

  double sum = w_mode * p_mode;
  int terms = 1;
  // P(a + j, x) falls as j grows, so the backward terms are bounded by P(a, x)
  // and the forward terms by the current P.
  const double p_upper = gamma_p(a, x);

  // Forward: j = mode+1, mode+2, ...
  {
    double w = w_mode, p = p_mode, log_t = log_t_mode;
    for (double j = mode + 1.0;; j += 1.0) {
      p = std::max(0.0, p - std::exp(log_t));
      w *= mu / j;
      log_t += log_x - std::log(a + j);
      sum += w * p;
      if (++terms > kMaxSeriesTerms) {
        throw ConvergenceError("ncx2_cdf: series exceeded 1e5 terms");
      }
      const double rho = mu / (j + 1.0);
      if (rho < 1.0 && p * w * rho / (1.0 - rho) < kTailTolerance) break;
      if ((w == 0.0 || p == 0.0) && j > mu) break;
    }
  }
  // Backward: j = mode-1, ..., 0.
  {
    double w = w_mode, p = p_mode, log_t = log_t_mode;
    for (double j = mode - 1.0; j >= 0.0; j -= 1.0) {
      log_t -= log_x - std::log(a + j + 1.0);
      p = std::min(1.0, p + std::exp(log_t));
      w *= (j + 1.0) / mu;
      sum += w * p;
      if (++terms > kMaxSeriesTerms) {
        throw ConvergenceError("ncx2_cdf: series exceeded 1e5 terms");
      }
      const double rho = j / mu;
      if (p_upper * w * rho / (1.0 - rho) < kTailTolerance) break;
    }
  }
  return std::clamp(sum, 0.0, 1.0);
}

DetectionStatistic p_value(const Spectrum& y, const WatermarkPattern& pattern) {
  DetectionStatistic s;
  s.sigma_sq = estimate_sigma_sq(y, pattern.mask, pattern.key.channel);
  if (!(s.sigma_sq >= kMinSigmaSq)) {
    throw DegenerateInput("p_value: variance estimate below 1e-12");
  }
  double mismatch = 0.0, energy = 0.0;
  for_each_masked(y, pattern, [&](std::complex<double> wm, std::complex<double> v) {
    mismatch += std::norm(wm - v);
    energy += std::norm(wm);
  });
  s.z = mismatch / s.sigma_sq;
  s.lambda = energy / s.sigma_sq;
  s.dof = static_cast<int>(pattern.mask.size());
  s.p_value = ncx2_cdf(s.dof, s.lambda, s.z);
  return s;
}

double detection_distance(const Spectrum& y, const WatermarkPattern& pattern) {
  const std::size_t n = pattern.mask.size();
  if (n == 0) throw InvalidArgument("detection_distance: empty mask");
  double sum = 0.0;
  for_each_masked(y, pattern, [&](std::complex<double> wm, std::complex<double> v) {
    sum += std::abs(wm - v);
  });
  return sum / static_cast<double>(n);
}

double detection_resolution(const Spectrum& y_plain, const Spectrum& y_wm,
                            const WatermarkPattern& pattern) {
  if (y_plain.shape() != y_wm.shape()) {
    throw InvalidArgument("detection_resolution: spectra differ in shape");
  }
  return detection_distance(y_plain, pattern) - detection_distance(y_wm, pattern);
}

GCriterionResult g_criterion(double r_det, double scaler,
                             const GCriterionConstants& consts) {
  GCriterionResult g;
  g.denominator = scaler * (consts.k * scaler + consts.b);
  if (!(g.denominator > 0.0)) {
    throw CriterionUndefined("g_criterion: k*S^2 + b*S = " +
                             std::to_string(g.denominator) + " is not positive");
  }
  g.ratio = r_det / g.denominator;
  g.pass = g.ratio >= 1.0;
  return g;
}

}  // namespace metr
