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

#include "metr/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "metr/fft.hpp"
#include "metr/jpeg.hpp"

namespace metr {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string short_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << v;
  return os.str();
}

// Coordinates this close outside the frame are snapped onto it so that exact
// rotations (e.g. a full turn) do not lose border pixels to rounding.
constexpr double kFrameSlack = 1e-9;

double sample_bilinear(std::span<const double> plane, std::size_t h,
                       std::size_t w, double sy, double sx, bool zero_fill) {
  const double max_y = double(h - 1), max_x = double(w - 1);
  if (zero_fill && (sy < -kFrameSlack || sy > max_y + kFrameSlack ||
                    sx < -kFrameSlack || sx > max_x + kFrameSlack)) {
    return 0.0;
  }
  sy = std::clamp(sy, 0.0, max_y);
  sx = std::clamp(sx, 0.0, max_x);
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const std::size_t x1 = std::min(x0 + 1, w - 1);
  const double fy = sy - double(y0), fx = sx - double(x0);
  const double top = plane[y0 * w + x0] * (1 - fx) + plane[y0 * w + x1] * fx;
  const double bottom = plane[y1 * w + x0] * (1 - fx) + plane[y1 * w + x1] * fx;
  return top * (1 - fy) + bottom * fy;
}

std::pair<double, double> channel_range(std::span<const double> plane) {
  auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
  return {*lo, *hi};
}

}  // namespace

std::string attack_kind(const AttackSpec& spec) {
  return std::visit(
      Overloaded{
          [](const NoAttack&) { return std::string("none"); },
          [](const Rotate&) { return std::string("rotate"); },
          [](const Jpeg&) { return std::string("jpeg"); },
          [](const CropScale&) { return std::string("crop_scale"); },
          [](const Blur&) { return std::string("blur"); },
          [](const GaussianNoise&) { return std::string("gaussian_noise"); },
          [](const Brightness&) { return std::string("brightness"); },
          [](const DiffusionRegen&) { return std::string("diffusion_regen"); },
          [](const LowpassRecon&) { return std::string("lowpass_recon"); },
      },
      spec);
}

std::string attack_label(const AttackSpec& spec) {
  return std::visit(
      Overloaded{
          [](const NoAttack&) { return std::string("No attack"); },
          [](const Rotate& a) { return "rotate " + short_number(a.degrees); },
          [](const Jpeg& a) { return "JPEG " + std::to_string(a.quality); },
          [](const CropScale& a) { return "crop " + short_number(a.keep); },
          [](const Blur& a) { return "blur r=" + short_number(a.radius); },
          [](const GaussianNoise& a) { return "noise sigma=" + short_number(a.sigma); },
          [](const Brightness& a) { return "brightness " + short_number(a.factor); },
          [](const DiffusionRegen& a) { return "diff " + std::to_string(a.step) + " steps"; },
          [](const LowpassRecon& a) { return "lowpass " + short_number(a.keep); },
      },
      spec);
}

void validate_attack(const AttackSpec& spec) {
  auto fail = [](const std::string& msg) { throw InvalidArgument(msg); };
  std::visit(
      Overloaded{
          [](const NoAttack&) {},
          [&](const Rotate& a) {
            if (!std::isfinite(a.degrees)) fail("rotate: degrees must be finite");
          },
          [&](const Jpeg& a) {
            if (a.quality < 1 || a.quality > 100) fail("jpeg: quality must be in [1, 100]");
          },
          [&](const CropScale& a) {
            if (!(a.keep > 0.0 && a.keep <= 1.0)) fail("crop_scale: keep must be in (0, 1]");
          },
          [&](const Blur& a) {
            if (!(a.radius >= 0.0) || !std::isfinite(a.radius)) fail("blur: radius must be >= 0");
          },
          [&](const GaussianNoise& a) {
            if (!(a.sigma >= 0.0) || !std::isfinite(a.sigma)) fail("gaussian_noise: sigma must be >= 0");
          },
          [&](const Brightness& a) {
            if (!(a.factor >= 0.0) || !std::isfinite(a.factor)) fail("brightness: factor must be >= 0");
          },
          [&](const DiffusionRegen& a) {
            if (a.step < 1) fail("diffusion_regen: step must be >= 1");
          },
          [&](const LowpassRecon& a) {
            if (!(a.keep > 0.0 && a.keep <= 1.0)) fail("lowpass_recon: keep must be in (0, 1]");
          },
      },
      spec);
}

LatentTensor rotate_image(const LatentTensor& img, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const std::size_t h = img.height(), w = img.width();
  const double cy = 0.5 * double(h - 1), cx = 0.5 * double(w - 1);
  LatentTensor out(img.shape());
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    auto src = img.channel(ch);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = double(y) - cy, dx = double(x) - cx;
        const double sx = cx + c * dx + s * dy;
        const double sy = cy - s * dx + c * dy;
        out(ch, y, x) = sample_bilinear(src, h, w, sy, sx, true);
      }
    }
  }
  return out;
}

LatentTensor crop_scale_image(const LatentTensor& img, double keep) {
  const std::size_t h = img.height(), w = img.width();
  const double cy = 0.5 * double(h - 1), cx = 0.5 * double(w - 1);
  LatentTensor out(img.shape());
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    auto src = img.channel(ch);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double sy = cy + (double(y) - cy) * keep;
        const double sx = cx + (double(x) - cx) * keep;
        out(ch, y, x) = sample_bilinear(src, h, w, sy, sx, false);
      }
    }
  }
  return out;
}

LatentTensor gaussian_blur(const LatentTensor& img, double radius) {
  if (radius == 0.0) return img;
  const double sd = radius / 2.0;
  const int half = static_cast<int>(std::ceil(3.0 * sd));
  std::vector<double> kernel(2 * half + 1);
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    kernel[i + half] = std::exp(-0.5 * (i * i) / (sd * sd));
    total += kernel[i + half];
  }
  for (double& k : kernel) k /= total;

  const int h = static_cast<int>(img.height()), w = static_cast<int>(img.width());
  LatentTensor tmp(img.shape()), out(img.shape());
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          acc += kernel[i + half] * img(ch, y, std::clamp(x + i, 0, w - 1));
        }
        tmp(ch, y, x) = acc;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          acc += kernel[i + half] * tmp(ch, std::clamp(y + i, 0, h - 1), x);
        }
        out(ch, y, x) = acc;
      }
  }
  return out;
}

LatentTensor jpeg_image(const LatentTensor& img, int quality) {
  LatentTensor out = img;
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    auto plane = out.channel(ch);
    const auto [lo, hi] = channel_range(plane);
    if (!(hi > lo)) continue;
    const double span = hi - lo;
    for (double& v : plane) v = (v - lo) / span * 255.0;
    jpeg_roundtrip_plane(plane, img.height(), img.width(), quality);
    for (double& v : plane) v = lo + v / 255.0 * span;
  }
  return out;
}

LatentTensor lowpass_image(const LatentTensor& img, double keep) {
  Spectrum spec = fft2(img);
  const double cy = double(center_index(img.height()));
  const double cx = double(center_index(img.width()));
  const double ly = keep * 0.5 * double(img.height());
  const double lx = keep * 0.5 * double(img.width());
  for (std::size_t ch = 0; ch < img.channels(); ++ch)
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x) {
        if (std::abs(double(y) - cy) > ly || std::abs(double(x) - cx) > lx) {
          spec(ch, y, x) = 0.0;
        }
      }
  return ifft2(spec).tensor;
}

LatentTensor apply_attack(const LatentTensor& img, const AttackSpec& spec,
                          Rng& rng, const EpsilonPredictor& pred,
                          const AlphaSchedule& sched) {
  validate_attack(spec);
  if (!all_finite(img)) throw InvalidArgument("apply_attack: non-finite image");
  return std::visit(
      Overloaded{
          [&](const NoAttack&) { return img; },
          [&](const Rotate& a) { return rotate_image(img, a.degrees); },
          [&](const Jpeg& a) { return jpeg_image(img, a.quality); },
          [&](const CropScale& a) { return crop_scale_image(img, a.keep); },
          [&](const Blur& a) { return gaussian_blur(img, a.radius); },
          [&](const GaussianNoise& a) {
            LatentTensor out = img;
            for (std::size_t ch = 0; ch < img.channels(); ++ch) {
              auto plane = out.channel(ch);
              const auto [lo, hi] = channel_range(plane);
              const double sd = a.sigma * (hi - lo);
              for (double& v : plane) v += sd * rng.gaussian();
            }
            return out;
          },
          [&](const Brightness& a) {
            LatentTensor out = img;
            for (std::size_t ch = 0; ch < img.channels(); ++ch) {
              auto plane = out.channel(ch);
              double m = 0.0;
              for (double v : plane) m += v;
              m /= double(plane.size());
              for (double& v : plane) v = m + a.factor * (v - m);
            }
            return out;
          },
          [&](const DiffusionRegen& a) {
            if (a.step > sched.steps()) {
              throw InvalidArgument("diffusion_regen: step exceeds schedule length");
            }
            LatentTensor eps = sample_gaussian(rng, img.shape());
            return ddim_sample_from(forward_noise(img, eps, a.step, sched), a.step,
                                    pred, sched);
          },
          [&](const LowpassRecon& a) { return lowpass_image(img, a.keep); },
      },
      spec);
}

}  // namespace metr
