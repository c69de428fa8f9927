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

#include <string>
#include <variant>

#include "metr/diffusion.hpp"
#include "metr/rng.hpp"
#include "metr/tensor.hpp"

namespace metr {

struct NoAttack {};
/// Rotation about the image center, bilinear, zero fill outside the frame.
struct Rotate { double degrees = 0.0; };
/// Per-channel min-max to [0, 255], baseline JPEG at `quality`, mapped back.
struct Jpeg { int quality = 75; };
/// Keep the central `keep` fraction per axis and rescale to full size.
struct CropScale { double keep = 1.0; };
/// Gaussian blur with standard deviation radius / 2, truncated at 3 std.
struct Blur { double radius = 0.0; };
/// Adds N(0, (sigma * channel range)^2).
struct GaussianNoise { double sigma = 0.0; };
/// m + factor * (x - m) with m the channel mean.
struct Brightness { double factor = 1.0; };
/// Noise the image to `step` and run DDIM back to 0 with the pipeline's
/// predictor.
struct DiffusionRegen { int step = 1; };
/// Zero all but the lowest `keep` fraction of centered frequencies per axis.
struct LowpassRecon { double keep = 1.0; };

using AttackSpec = std::variant<NoAttack, Rotate, Jpeg, CropScale, Blur,
                                GaussianNoise, Brightness, DiffusionRegen,
                                LowpassRecon>;

/// Machine name of the kind: "none", "rotate", "jpeg", "crop_scale", "blur",
/// "gaussian_noise", "brightness", "diffusion_regen", "lowpass_recon".
std::string attack_kind(const AttackSpec& spec);
/// Human label such as "blur r=4" or "JPEG 25".
std::string attack_label(const AttackSpec& spec);

/// Throws InvalidArgument for out-of-range parameters.
void validate_attack(const AttackSpec& spec);

/// Applies the attack to every channel. `pred` and `sched` are only used by
/// DiffusionRegen; `rng` only by the stochastic kinds.
LatentTensor apply_attack(const LatentTensor& img, const AttackSpec& spec,
                          Rng& rng, const EpsilonPredictor& pred,
                          const AlphaSchedule& sched);

LatentTensor rotate_image(const LatentTensor& img, double degrees);
LatentTensor crop_scale_image(const LatentTensor& img, double keep);
LatentTensor gaussian_blur(const LatentTensor& img, double radius);
LatentTensor jpeg_image(const LatentTensor& img, int quality);
LatentTensor lowpass_image(const LatentTensor& img, double keep);

}  // namespace metr
