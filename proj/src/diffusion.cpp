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

#include "metr/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "metr/fft.hpp"

namespace metr {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_same_shape(const LatentTensor& a, const LatentTensor& b,
                        const char* what) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch");
  }
}

void require_step(int t, int lo, const AlphaSchedule& sched, const char* what) {
  if (t < lo || t > sched.steps()) {
    throw InvalidArgument(std::string(what) + ": step " + std::to_string(t) +
                          " outside [" + std::to_string(lo) + ", " +
                          std::to_string(sched.steps()) + "]");
  }
}

// Writes eps(x, t) into `out` (same shape as x).
void predict_into(const EpsilonPredictor& pred, const LatentTensor& x, int t,
                  const AlphaSchedule& sched, LatentTensor& out) {
  auto dst = out.values();
  auto src = x.values();
  std::visit(
      Overloaded{
          [&](const ZeroPredictor&) { std::fill(dst.begin(), dst.end(), 0.0); },
          [&](const LinearPredictor& p) {
            const double c = p.coefficients.at(static_cast<std::size_t>(t - 1));
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = c * src[i];
          },
          [&](const GaussianPriorPredictor& p) {
            const double ab = sched[t];
            const double sa = std::sqrt(ab);
            const double s1 = std::sqrt(1.0 - ab);
            const double gain = sa * p.variance / (ab * p.variance + 1.0 - ab);
            auto mu = p.mean.values();
            for (std::size_t i = 0; i < src.size(); ++i) {
              const double post = mu[i] + gain * (src[i] - sa * mu[i]);
              dst[i] = (src[i] - sa * post) / s1;
            }
          },
      },
      pred);
}

}  // namespace

AlphaSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw InvalidArgument("make_schedule: steps must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw InvalidArgument(
        "make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  AlphaSchedule s;
  s.alpha_bar.reserve(static_cast<std::size_t>(steps) + 1);
  s.alpha_bar.push_back(1.0);
  double prod = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : double(t - 1) / double(steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    prod *= 1.0 - beta;
    s.alpha_bar.push_back(prod);
  }
  return s;
}

std::string predictor_name(const EpsilonPredictor& pred) {
  return std::visit(Overloaded{
                        [](const ZeroPredictor&) { return std::string("zero"); },
                        [](const LinearPredictor&) { return std::string("linear"); },
                        [](const GaussianPriorPredictor&) {
                          return std::string("gaussian_prior");
                        },
                    },
                    pred);
}

void validate_predictor(const EpsilonPredictor& pred, const AlphaSchedule& sched,
                        const Shape& shape) {
  std::visit(
      Overloaded{
          [](const ZeroPredictor&) {},
          [&](const LinearPredictor& p) {
            if (p.coefficients.size() != static_cast<std::size_t>(sched.steps())) {
              throw InvalidArgument("linear predictor needs one coefficient per step (" +
                                    std::to_string(sched.steps()) + ")");
            }
            for (double c : p.coefficients) {
              if (!std::isfinite(c)) {
                throw InvalidArgument("linear predictor coefficient not finite");
              }
            }
          },
          [&](const GaussianPriorPredictor& p) {
            if (!(p.variance > 0.0) || !std::isfinite(p.variance)) {
              throw InvalidArgument("gaussian prior variance must be positive");
            }
            if (p.mean.shape() != shape) {
              throw InvalidArgument("gaussian prior mean shape does not match tensor");
            }
          },
      },
      pred);
}

LatentTensor predict_noise(const EpsilonPredictor& pred, const LatentTensor& xt,
                           int t, const AlphaSchedule& sched) {
  require_step(t, 1, sched, "predict_noise");
  validate_predictor(pred, sched, xt.shape());
  LatentTensor out(xt.shape());
  predict_into(pred, xt, t, sched, out);
  return out;
}

LatentTensor forward_noise(const LatentTensor& x0, const LatentTensor& eps,
                           int t, const AlphaSchedule& sched) {
  require_same_shape(x0, eps, "forward_noise");
  require_step(t, 0, sched, "forward_noise");
  const double sa = std::sqrt(sched[t]);
  const double s1 = std::sqrt(1.0 - sched[t]);
  LatentTensor out(x0.shape());
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = sa * x0.values()[i] + s1 * eps.values()[i];
  }
  return out;
}

LatentTensor ddim_denoise_estimate(const LatentTensor& xt, int t,
                                   const EpsilonPredictor& pred,
                                   const AlphaSchedule& sched) {
  LatentTensor eps = predict_noise(pred, xt, t, sched);
  const double sa = std::sqrt(sched[t]);
  const double s1 = std::sqrt(1.0 - sched[t]);
  LatentTensor out(xt.shape());
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = (xt.values()[i] - s1 * eps.values()[i]) / sa;
  }
  return out;
}

LatentTensor ddim_sample_from(const LatentTensor& xt, int t_start,
                              const EpsilonPredictor& pred,
                              const AlphaSchedule& sched) {
  require_step(t_start, 0, sched, "ddim_sample");
  validate_predictor(pred, sched, xt.shape());
  if (!all_finite(xt)) throw InvalidArgument("ddim_sample: non-finite input");
  LatentTensor x = xt;
  LatentTensor eps(xt.shape());
  auto xv = x.values();
  auto ev = eps.values();
  for (int t = t_start; t >= 1; --t) {
    predict_into(pred, x, t, sched, eps);
    const double sa = std::sqrt(sched[t]);
    const double s1 = std::sqrt(1.0 - sched[t]);
    const double sa_prev = std::sqrt(sched[t - 1]);
    const double s1_prev = std::sqrt(1.0 - sched[t - 1]);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double x0 = (xv[i] - s1 * ev[i]) / sa;
      xv[i] = sa_prev * x0 + s1_prev * ev[i];
    }
  }
  return x;
}

LatentTensor ddim_sample(const LatentTensor& xT, const EpsilonPredictor& pred,
                         const AlphaSchedule& sched) {
  return ddim_sample_from(xT, sched.steps(), pred, sched);
}

LatentTensor ddim_invert(const LatentTensor& x0, const EpsilonPredictor& pred,
                         const AlphaSchedule& sched) {
  validate_predictor(pred, sched, x0.shape());
  if (!all_finite(x0)) throw InvalidArgument("ddim_invert: non-finite input");
  LatentTensor x = x0;
  LatentTensor eps(x0.shape());
  auto xv = x.values();
  auto ev = eps.values();
  for (int t = 0; t < sched.steps(); ++t) {
    // No predictor is defined at t = 0; use step 1.
    predict_into(pred, x, std::max(t, 1), sched, eps);
    const double sa = std::sqrt(sched[t]);
    const double s1 = std::sqrt(1.0 - sched[t]);
    const double sa_next = std::sqrt(sched[t + 1]);
    const double s1_next = std::sqrt(1.0 - sched[t + 1]);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double est = (xv[i] - s1 * ev[i]) / sa;
      xv[i] = sa_next * est + s1_next * ev[i];
    }
  }
  return x;
}

LatentTensor make_prior_content(Shape shape, double amplitude,
                                double min_radius, std::uint64_t seed) {
  if (!(amplitude >= 0.0)) {
    throw InvalidArgument("prior content amplitude must be >= 0");
  }
  if (amplitude == 0.0) return LatentTensor(shape);
  Rng rng(seed);
  Spectrum spec = fft2(sample_gaussian(rng, shape));
  const auto cy = static_cast<double>(center_index(shape.height));
  const auto cx = static_cast<double>(center_index(shape.width));
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t y = 0; y < shape.height; ++y) {
      for (std::size_t x = 0; x < shape.width; ++x) {
        const double k = std::hypot(double(y) - cy, double(x) - cx);
        spec(c, y, x) *= (k >= min_radius && k > 0.0) ? 1.0 / k : 0.0;
      }
    }
  }
  LatentTensor out = ifft2(spec).tensor;
  for (std::size_t c = 0; c < shape.channels; ++c) {
    auto plane = out.channel(c);
    double mean = 0.0, sq = 0.0;
    for (double v : plane) mean += v;
    mean /= static_cast<double>(plane.size());
    for (double v : plane) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / static_cast<double>(plane.size()));
    if (sd == 0.0) {
      throw InvalidArgument("prior content band is empty for this shape");
    }
    for (double& v : plane) v = (v - mean) * amplitude / sd;
  }
  return out;
}

GaussianPriorPredictor make_gaussian_prior(Shape shape, double variance,
                                           double amplitude, double min_radius,
                                           std::uint64_t seed) {
  if (!(variance > 0.0)) throw InvalidArgument("prior variance must be > 0");
  return {make_prior_content(shape, amplitude, min_radius, seed), variance};
}

LatentTensor watermark_noise(const LatentTensor& noise,
                             const WatermarkPattern& pattern,
                             double* max_imag_residual) {
  RealInverse inv = ifft2(embed(fft2(noise), pattern));
  if (max_imag_residual) *max_imag_residual = inv.max_imag_residual;
  return std::move(inv.tensor);
}

Generation generate_watermarked(Rng& rng, Shape shape, const WatermarkKey& key,
                                const Message& msg, const EpsilonPredictor& pred,
                                const AlphaSchedule& sched) {
  const WatermarkPattern pattern = encode(msg, key);
  Generation g;
  g.noise = sample_gaussian(rng, shape);
  g.noise_wm = watermark_noise(g.noise, pattern, &g.max_imag_residual);
  g.image = ddim_sample(g.noise_wm, pred, sched);
  return g;
}

Spectrum recover_spectrum(const LatentTensor& image, const EpsilonPredictor& pred,
                          const AlphaSchedule& sched) {
  return fft2(ddim_invert(image, pred, sched));
}

DetectionReport analyze_spectrum(const Spectrum& y, const WatermarkKey& key,
                                 double p0, const Message* reference) {
  DetectionReport r;
  r.p0 = p0;
  const RingMask mask = build_mask(key);
  r.ring_means = ring_means(y, mask, key.channel);
  r.bits = decode_bits(y, key);
  r.reference_from_decoded = reference == nullptr;
  const WatermarkPattern pattern = encode(reference ? *reference : r.bits, key);
  r.detection_distance = detection_distance(y, pattern);
  try {
    r.statistic = p_value(y, pattern);
    r.present = r.statistic->p_value < p0;
  } catch (const DegenerateInput& e) {
    r.statistic_error = e.what();
  } catch (const ConvergenceError& e) {
    r.statistic_error = e.what();
  }
  return r;
}

DetectionReport detect_message(const LatentTensor& image, const WatermarkKey& key,
                               const EpsilonPredictor& pred,
                               const AlphaSchedule& sched, double p0,
                               const Message* reference) {
  if (image.height() != key.height || image.width() != key.width ||
      key.channel >= image.channels()) {
    throw InvalidArgument("detect_message: image shape does not match the key");
  }
  return analyze_spectrum(recover_spectrum(image, pred, sched), key, p0, reference);
}

}  // namespace metr
