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

#include "metr/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "metr/parallel.hpp"

namespace metr {

void Pipeline::validate() const {
  if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
    throw InvalidArgument("pipeline shape must be positive");
  }
  if (key.height != shape.height || key.width != shape.width) {
    throw InvalidArgument("watermark key dims do not match the latent shape");
  }
  if (key.channel >= shape.channels) {
    throw InvalidArgument("watermark channel " + std::to_string(key.channel) +
                          " out of range for " + std::to_string(shape.channels) +
                          " channels");
  }
  key.validate();
  validate_predictor(predictor, schedule, shape);
  if (!(p0 > 0.0 && p0 < 1.0)) throw InvalidArgument("p0 must be in (0, 1)");
}

double auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw InvalidArgument("auc: empty score list");
  // Rank-sum with midranks for ties.
  std::vector<std::pair<double, int>> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.emplace_back(s, 1);
  for (double s : neg) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double midrank = 0.5 * double(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double np = double(pos.size()), nn = double(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double tpr_at_fpr(std::span<const double> pos, std::span<const double> neg,
                  double fpr) {
  if (pos.empty() || neg.empty()) throw InvalidArgument("tpr_at_fpr: empty score list");
  if (!(fpr > 0.0 && fpr < 1.0)) throw InvalidArgument("tpr_at_fpr: fpr must be in (0, 1)");
  std::vector<double> sorted(neg.begin(), neg.end());
  std::sort(sorted.begin(), sorted.end());
  const double position = double(sorted.size() - 1) * (1.0 - fpr);
  const auto idx = static_cast<std::size_t>(std::ceil(position - 1e-9));
  const double threshold = sorted[std::min(idx, sorted.size() - 1)];
  const auto above = std::count_if(pos.begin(), pos.end(),
                                   [&](double s) { return s > threshold; });
  return double(above) / double(pos.size());
}

namespace {
void check_aligned(std::span<const Message> truth, std::span<const Message> decoded) {
  if (truth.size() != decoded.size() || truth.empty()) {
    throw InvalidArgument("message lists must be non-empty and aligned");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].size() != decoded[i].size()) {
      throw InvalidArgument("message " + std::to_string(i) + " differs in length");
    }
  }
}
}  // namespace

double bit_accuracy(std::span<const Message> truth, std::span<const Message> decoded) {
  check_aligned(truth, decoded);
  std::size_t match = 0, total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t b = 0; b < truth[i].size(); ++b) {
      match += truth[i][b] == decoded[i][b];
    }
    total += truth[i].size();
  }
  return total == 0 ? 1.0 : double(match) / double(total);
}

double word_accuracy(std::span<const Message> truth, std::span<const Message> decoded) {
  check_aligned(truth, decoded);
  std::size_t match = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) match += truth[i] == decoded[i];
  return double(match) / double(truth.size());
}

double distortion_proxy(const LatentTensor& a, const LatentTensor& b) {
  if (a.shape() != b.shape()) throw InvalidArgument("distortion_proxy: shape mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    sq += d * d;
  }
  return std::sqrt(sq / double(a.size()));
}

std::uint64_t stream_id(const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EvalSummary summarize(const std::string& attack, std::span<const TrialRecord> trials) {
  if (trials.empty()) throw InvalidArgument("summarize: no trials");
  EvalSummary s;
  s.attack = attack;
  s.trials = trials.size();
  std::vector<double> pos, neg;
  std::vector<Message> truth, decoded;
  double r_det = 0.0, distortion = 0.0;
  for (const auto& t : trials) {
    pos.push_back(1.0 - t.p_wm);
    neg.push_back(1.0 - t.p_plain);
    truth.push_back(t.truth);
    decoded.push_back(t.decoded);
    r_det += t.detection_resolution;
    distortion += t.distortion;
  }
  s.auc = auc(pos, neg);
  s.tpr_at_1pct_fpr = tpr_at_fpr(pos, neg, 0.01);
  s.bit_accuracy = bit_accuracy(truth, decoded);
  s.word_accuracy = word_accuracy(truth, decoded);
  s.mean_detection_resolution = r_det / double(trials.size());
  s.distortion_proxy = distortion / double(trials.size());
  return s;
}

std::vector<AttackEvaluation> evaluate_attacks(const Pipeline& pipeline,
                                               const std::vector<AttackSpec>& attacks,
                                               std::size_t trials, std::uint64_t seed,
                                               const std::optional<Message>& fixed_message) {
  pipeline.validate();
  if (trials == 0) throw InvalidArgument("evaluate_attacks: trials must be positive");
  for (const auto& a : attacks) validate_attack(a);
  if (fixed_message && fixed_message->size() != std::size_t(pipeline.key.radius)) {
    throw InvalidArgument("fixed message length does not match the radius");
  }

  std::vector<std::vector<TrialRecord>> records(
      attacks.size(), std::vector<TrialRecord>(trials));
  const Rng root(seed);
  const auto& pred = pipeline.predictor;
  const auto& sched = pipeline.schedule;

  parallel_for(trials, [&](std::size_t i) {
    const Rng trial_rng = root.fork(i);
    Rng noise_rng = trial_rng.fork(0);
    Rng msg_rng = trial_rng.fork(1);
    const Message truth = fixed_message
                              ? *fixed_message
                              : Message::random(std::size_t(pipeline.key.radius), msg_rng);
    const Generation gen =
        generate_watermarked(noise_rng, pipeline.shape, pipeline.key, truth, pred, sched);
    const LatentTensor plain = ddim_sample(gen.noise, pred, sched);
    const double distortion = distortion_proxy(gen.image, plain);
    const WatermarkPattern pattern = encode(truth, pipeline.key);

    for (std::size_t a = 0; a < attacks.size(); ++a) {
      const std::uint64_t sid = stream_id(attack_label(attacks[a]));
      Rng rng_wm = trial_rng.fork(sid);
      Rng rng_plain = trial_rng.fork(sid ^ 0x5bd1e995ULL);
      const Spectrum y_wm = recover_spectrum(
          apply_attack(gen.image, attacks[a], rng_wm, pred, sched), pred, sched);
      const Spectrum y_plain = recover_spectrum(
          apply_attack(plain, attacks[a], rng_plain, pred, sched), pred, sched);
      const DetectionReport wm = analyze_spectrum(y_wm, pipeline.key, pipeline.p0, &truth);
      const DetectionReport pl = analyze_spectrum(y_plain, pipeline.key, pipeline.p0, &truth);

      TrialRecord& r = records[a][i];
      r.index = i;
      r.truth = truth;
      r.decoded = wm.bits;
      r.p_wm = wm.p_value_or_one();
      r.p_plain = pl.p_value_or_one();
      r.present_wm = wm.present;
      r.present_plain = pl.present;
      r.distance_wm = wm.detection_distance;
      r.distance_plain = pl.detection_distance;
      r.detection_resolution = detection_resolution(y_plain, y_wm, pattern);
      r.distortion = distortion;
    }
  });

  std::vector<AttackEvaluation> out;
  out.reserve(attacks.size());
  for (std::size_t a = 0; a < attacks.size(); ++a) {
    out.push_back({attacks[a], summarize(attack_label(attacks[a]), records[a]),
                   std::move(records[a])});
  }
  return out;
}

void ScalerSearchConfig::validate() const {
  if (!(s_min < s_max)) throw InvalidArgument("scaler search: need s_min < s_max");
  if (!(s_step > 0.0)) throw InvalidArgument("scaler search: s_step must be > 0");
  if (!(s_min > 0.0)) throw InvalidArgument("scaler search: s_min must be > 0");
  if (std::isnan(quality_budget) || quality_budget < 0.0) {
    throw InvalidArgument("scaler search: quality_budget must be >= 0");
  }
  if (trials == 0) throw InvalidArgument("scaler search: trials must be positive");
}

std::vector<double> ScalerSearchConfig::grid() const {
  validate();
  const auto n = static_cast<std::size_t>(std::floor((s_max - s_min) / s_step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = s_min + double(i) * s_step;
  return g;
}

ScalerSelection select_scaler(const ScalerSearchConfig& cfg, const Pipeline& pipeline,
                              std::uint64_t seed) {
  const std::vector<double> grid = cfg.grid();
  pipeline.validate();
  const auto& pred = pipeline.predictor;
  const auto& sched = pipeline.schedule;
  const Rng root(seed);

  // The probe pair shares x_T and the message across every candidate S.
  Rng probe_noise_rng = root.fork(0);
  Rng probe_msg_rng = root.fork(1);
  const LatentTensor probe_noise = sample_gaussian(probe_noise_rng, pipeline.shape);
  const Message probe_msg = Message::random(std::size_t(pipeline.key.radius), probe_msg_rng);
  const Spectrum y_plain =
      recover_spectrum(ddim_sample(probe_noise, pred, sched), pred, sched);

  ScalerSelection result;
  result.trace.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t gi) {
    ScalerTraceRecord& rec = result.trace[gi];
    rec.scaler = grid[gi];
    WatermarkKey key = pipeline.key;
    key.scaler = grid[gi];

    const WatermarkPattern pattern = encode(probe_msg, key);
    const LatentTensor image_wm = ddim_sample(watermark_noise(probe_noise, pattern), pred, sched);
    rec.detection_resolution =
        detection_resolution(y_plain, recover_spectrum(image_wm, pred, sched), pattern);
    try {
      rec.criterion = g_criterion(rec.detection_resolution, key.scaler, cfg.consts);
    } catch (const CriterionUndefined&) {
      return;
    }
    if (!rec.criterion->pass) return;

    double total = 0.0;
    for (std::size_t j = 0; j < cfg.trials; ++j) {
      const Rng pair_rng = root.fork(1000 + j);
      Rng noise_rng = pair_rng.fork(0);
      Rng msg_rng = pair_rng.fork(1);
      const LatentTensor noise = sample_gaussian(noise_rng, pipeline.shape);
      const Message msg = Message::random(std::size_t(key.radius), msg_rng);
      const LatentTensor wm = ddim_sample(watermark_noise(noise, encode(msg, key)), pred, sched);
      total += distortion_proxy(wm, ddim_sample(noise, pred, sched));
    }
    rec.distortion = total / double(cfg.trials);
    rec.quality_pass = *rec.distortion <= cfg.quality_budget;
  });

  for (auto& rec : result.trace) {
    if (rec.criterion && rec.criterion->pass && rec.quality_pass) {
      rec.selected = true;
      result.scaler = rec.scaler;
      break;
    }
  }
  return result;
}

}  // namespace metr
