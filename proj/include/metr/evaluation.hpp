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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metr/attacks.hpp"
#include "metr/detection_stats.hpp"
#include "metr/diffusion.hpp"
#include "metr/ring_codec.hpp"

namespace metr {

/// Everything needed to generate and detect: latent shape, key, predictor,
/// schedule and presence threshold.
struct Pipeline {
  Shape shape{1, 64, 64};
  WatermarkKey key;
  EpsilonPredictor predictor = ZeroPredictor{};
  AlphaSchedule schedule = make_schedule(40);
  double p0 = kDefaultPresenceThreshold;

  void validate() const;
};

// Metrics. Scores follow "higher = more watermark-like" (1 - p).

/// Mann-Whitney estimate of P(pos > neg) + 0.5 P(pos == neg).
double auc(std::span<const double> scores_pos, std::span<const double> scores_neg);

/// Fraction of positives strictly above the (1 - fpr) quantile of the
/// negatives, quantile taken as the higher order statistic
/// neg_sorted[ceil((n - 1) * (1 - fpr))].
double tpr_at_fpr(std::span<const double> scores_pos,
                  std::span<const double> scores_neg, double fpr);

double bit_accuracy(std::span<const Message> truth, std::span<const Message> decoded);
double word_accuracy(std::span<const Message> truth, std::span<const Message> decoded);

/// Root-mean-square difference over all elements.
double distortion_proxy(const LatentTensor& img_wm, const LatentTensor& img_plain);

struct TrialRecord {
  std::size_t index = 0;
  Message truth;
  Message decoded;
  double p_wm = 1.0;
  double p_plain = 1.0;
  bool present_wm = false;
  bool present_plain = false;
  double distance_wm = 0.0;
  double distance_plain = 0.0;
  double detection_resolution = 0.0;
  double distortion = 0.0;  ///< RMS between watermarked and plain image, before the attack
};

struct EvalSummary {
  std::string attack;
  std::size_t trials = 0;
  double auc = 0.0;
  double tpr_at_1pct_fpr = 0.0;
  double bit_accuracy = 0.0;
  double word_accuracy = 0.0;
  double mean_detection_resolution = 0.0;
  double distortion_proxy = 0.0;
};

struct AttackEvaluation {
  AttackSpec attack;
  EvalSummary summary;
  std::vector<TrialRecord> trials;
};

EvalSummary summarize(const std::string& attack, std::span<const TrialRecord> trials);

/// Trial i draws x_T and a message from Rng(seed).fork(i), generates the
/// watermarked and the plain image from the same x_T, attacks both and runs
/// detection on both against the true message. Per-attack randomness is a
/// sub-stream keyed by the attack label, so adding attacks to the list does
/// not change the others' results.
std::vector<AttackEvaluation> evaluate_attacks(
    const Pipeline& pipeline, const std::vector<AttackSpec>& attacks,
    std::size_t trials, std::uint64_t seed,
    const std::optional<Message>& fixed_message = std::nullopt);

struct ScalerSearchConfig {
  double s_min = 60.0;
  double s_max = 160.0;
  double s_step = 10.0;
  double quality_budget = std::numeric_limits<double>::infinity();
  GCriterionConstants consts;
  std::size_t trials = 8;

  void validate() const;
  std::vector<double> grid() const;
};

struct ScalerTraceRecord {
  double scaler = 0.0;
  double detection_resolution = 0.0;
  std::optional<GCriterionResult> criterion;  ///< empty when undefined
  std::optional<double> distortion;           ///< only when the criterion passes
  bool quality_pass = false;
  bool selected = false;
};

struct ScalerSelection {
  std::optional<double> scaler;  ///< empty: nothing qualified
  std::vector<ScalerTraceRecord> trace;
};

/// Scaler search. For every S on the grid: one pair of images with and
/// without the watermark from a shared x_T gives R_det for the g-criterion;
/// if it passes, the mean distortion over `trials` further pairs is compared
/// against the budget. Returns the smallest S passing both and the full
/// trace. Candidates are evaluated independently, in parallel.
ScalerSelection select_scaler(const ScalerSearchConfig& cfg,
                              const Pipeline& pipeline, std::uint64_t seed);

/// Label-keyed sub-stream id (FNV-1a of the label).
std::uint64_t stream_id(const std::string& label);

}  // namespace metr
