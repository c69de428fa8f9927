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
#include <vector>

#include "json.hpp"
#include "metr/attacks.hpp"
#include "metr/diffusion.hpp"
#include "metr/evaluation.hpp"
#include "metr/metrpp.hpp"
#include "metr/ring_codec.hpp"

namespace metr {

/// Six significant digits, shortest form, '.' decimal separator regardless
/// of locale.
std::string format_number(double v);

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string& s);

nlohmann::json to_json(const WatermarkKey& key);
nlohmann::json to_json(const AttackSpec& spec);
nlohmann::json to_json(const DetectionStatistic& stat);
nlohmann::json to_json(const DetectionReport& report);
nlohmann::json to_json(const EvalSummary& summary);
nlohmann::json to_json(const TrialRecord& record);
nlohmann::json to_json(const ScalerTraceRecord& record);
nlohmann::json to_json(const GlobalMessage& msg);

}  // namespace metr
