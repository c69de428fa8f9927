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

#include "metr/ring_codec.hpp"
#include "metr/tensor.hpp"

namespace metr {

/// Test statistic and p-value of the non-Gaussianity test on the masked
/// area. Small p means the recovered spectrum sits close to the watermark
/// pattern, i.e. the watermark is present.
struct DetectionStatistic {
  double sigma_sq = 0.0;  ///< mean |y_i|^2 over the mask
  double z = 0.0;         ///< sum |WM_i - y_i|^2 / sigma_sq
  double lambda = 0.0;    ///< sum |WM_i|^2 / sigma_sq
  int dof = 0;            ///< |M|
  double p_value = 1.0;   ///< ncx2_cdf(dof, lambda, z)
};

/// Smallest variance estimate accepted before the test is declared
/// degenerate.
inline constexpr double kMinSigmaSq = 1e-12;
inline constexpr double kDefaultPresenceThreshold = 0.01;

double estimate_sigma_sq(const Spectrum& y, const RingMask& mask,
                         std::size_t channel);

/// P(X <= z) for X ~ noncentral chi-squared(dof, lambda).
///
/// Poisson(lambda/2) mixture of central chi-squared CDFs, summed outward from
/// the Poisson mode with the recurrence
///   P(a + 1, x) = P(a, x) - x^a e^-x / Gamma(a + 1)
/// on the regularized lower incomplete gamma P. Each direction stops once a
/// geometric bound on its remaining Poisson mass, scaled by the largest
/// central CDF value still ahead, is below 0.5e-12. More than 1e5 terms
/// raises ConvergenceError.
double ncx2_cdf(int dof, double lambda, double z);

/// Throws DegenerateInput if sigma_sq < kMinSigmaSq.
DetectionStatistic p_value(const Spectrum& y, const WatermarkPattern& pattern);

/// Mean complex modulus |WM_i - y_i| over the mask.
double detection_distance(const Spectrum& y, const WatermarkPattern& pattern);

/// detection_distance(y_plain) - detection_distance(y_wm).
double detection_resolution(const Spectrum& y_plain, const Spectrum& y_wm,
                            const WatermarkPattern& pattern);

struct GCriterionConstants {
  double k = -2.23e-3;
  double b = 0.653;
};

struct GCriterionResult {
  double denominator = 0.0;  ///< k*S^2 + b*S
  double ratio = 0.0;        ///< R_det / denominator
  bool pass = false;         ///< ratio >= 1
};

/// Throws CriterionUndefined when k*S^2 + b*S <= 0.
GCriterionResult g_criterion(double r_det, double scaler,
                             const GCriterionConstants& consts = {});

}  // namespace metr
