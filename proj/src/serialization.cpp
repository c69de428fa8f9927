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

#include "metr/serialization.hpp"

#include <charconv>
#include <cmath>
#include <variant>

namespace metr {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  std::string s(buf, res.ptr);
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json to_json(const WatermarkKey& key) {
  return {{"r", key.radius}, {"S", key.scaler}, {"channel", key.channel},
          {"height", key.height}, {"width", key.width}};
}

json to_json(const AttackSpec& spec) {
  json params = std::visit(
      [](const auto& a) -> json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Rotate>) return {{"degrees", a.degrees}};
        else if constexpr (std::is_same_v<T, Jpeg>) return {{"quality", a.quality}};
        else if constexpr (std::is_same_v<T, CropScale>) return {{"keep", a.keep}};
        else if constexpr (std::is_same_v<T, Blur>) return {{"radius", a.radius}};
        else if constexpr (std::is_same_v<T, GaussianNoise>) return {{"sigma", a.sigma}};
        else if constexpr (std::is_same_v<T, Brightness>) return {{"factor", a.factor}};
        else if constexpr (std::is_same_v<T, DiffusionRegen>) return {{"step", a.step}};
        else if constexpr (std::is_same_v<T, LowpassRecon>) return {{"keep", a.keep}};
        else return json::object();
      },
      spec);
  return {{"kind", attack_kind(spec)}, {"label", attack_label(spec)}, {"params", params}};
}

json to_json(const DetectionStatistic& s) {
  return {{"sigma_sq", s.sigma_sq}, {"z", s.z}, {"lambda", s.lambda},
          {"dof", s.dof}, {"p_value", s.p_value}};
}

json to_json(const DetectionReport& r) {
  json j = {{"present", r.present},
            {"p0", r.p0},
            {"p_value", r.p_value_or_one()},
            {"bits", r.bits.to_string()},
            {"reference_from_decoded", r.reference_from_decoded},
            {"detection_distance", r.detection_distance},
            {"ring_means", r.ring_means}};
  j["statistic"] = r.statistic ? to_json(*r.statistic) : json(nullptr);
  if (!r.statistic_error.empty()) j["statistic_error"] = r.statistic_error;
  return j;
}

json to_json(const EvalSummary& s) {
  return {{"attack", s.attack},
          {"trials", s.trials},
          {"auc", s.auc},
          {"tpr_at_1pct_fpr", s.tpr_at_1pct_fpr},
          {"bit_accuracy", s.bit_accuracy},
          {"word_accuracy", s.word_accuracy},
          {"mean_detection_resolution", s.mean_detection_resolution},
          {"distortion_proxy", s.distortion_proxy}};
}

json to_json(const TrialRecord& t) {
  return {{"index", t.index},
          {"truth", t.truth.to_string()},
          {"decoded", t.decoded.to_string()},
          {"p_wm", t.p_wm},
          {"p_plain", t.p_plain},
          {"present_wm", t.present_wm},
          {"present_plain", t.present_plain},
          {"distance_wm", t.distance_wm},
          {"distance_plain", t.distance_plain},
          {"detection_resolution", t.detection_resolution},
          {"distortion", t.distortion}};
}

json to_json(const ScalerTraceRecord& r) {
  json j = {{"S", r.scaler},
            {"detection_resolution", r.detection_resolution},
            {"quality_pass", r.quality_pass},
            {"selected", r.selected}};
  if (r.criterion) {
    j["criterion"] = {{"denominator", r.criterion->denominator},
                      {"ratio", r.criterion->ratio},
                      {"pass", r.criterion->pass}};
  } else {
    j["criterion"] = nullptr;
  }
  j["distortion"] = r.distortion ? json(*r.distortion) : json(nullptr);
  return j;
}

json to_json(const GlobalMessage& m) {
  return {{"value", m.value}, {"r", m.r}, {"n", m.n}};
}

}  // namespace metr
