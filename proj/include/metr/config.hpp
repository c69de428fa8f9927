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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metr/attacks.hpp"
#include "metr/evaluation.hpp"
#include "metr/ring_codec.hpp"

namespace metr {

struct PredictorConfig {
  std::string kind = "zero";  ///< zero | linear | gaussian_prior
  std::vector<double> coefficients;
  double prior_variance = 1.0;
  double content_amplitude = kDefaultContentAmplitude;
  double content_min_radius = kDefaultContentMinRadius;
  std::uint64_t content_seed = kDefaultContentSeed;
};

/// One experiment, loaded from a single JSON document.
///
///   {
///     "seed": 0,
///     "shape": {"channels": 1, "height": 64, "width": 64},
///     "schedule": {"steps": 40, "beta_start": 1e-4, "beta_end": 0.02},
///     "predictor": {"kind": "gaussian_prior", "prior_variance": 1.0,
///                   "content": {"amplitude": 3500, "min_radius": 14, "seed": 1}},
///     "key": {"r": 10, "S": 100, "channel": 0},
///     "message": {"mode": "random"} | {"mode": "fixed", "bits": "1010110010"},
///     "watermark": true,
///     "attacks": [{"kind": "blur", "params": {"radius": 4}}],
///     "p0": 0.01,
///     "trials": 100,
///     "output_dir": "out",
///     "input_dir": "out",
///     "tune": {"s_min": 60, "s_max": 160, "s_step": 10,
///              "quality_budget": null, "trials": 8},
///     "g_criterion": {"k": -2.23e-3, "b": 0.653}
///   }
///
/// Every key is optional; unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  Shape shape{1, 64, 64};
  int steps = 40;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  PredictorConfig predictor;
  WatermarkKey key;
  std::optional<Message> fixed_message;
  bool watermark = true;
  std::vector<AttackSpec> attacks{NoAttack{}};
  double p0 = kDefaultPresenceThreshold;
  std::size_t trials = 10;
  std::filesystem::path output_dir = "out";
  std::filesystem::path input_dir;
  ScalerSearchConfig tune;

  /// Builds schedule and predictor. Throws InvalidArgument.
  Pipeline pipeline() const;
};

/// Throws ConfigError. Syntax errors carry "line L, column C"; semantic
/// errors carry the JSON path of the offending value and its line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);


}  // namespace metr
