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
#include <iosfwd>
#include <optional>
#include <string>

#include "metr/config.hpp"

namespace metr {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitInternal = 4,
};

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> in;
  std::optional<std::uint64_t> seed;
};

// Output layout:
//   gen     item_NNNN_noise.metr, item_NNNN_image.metr, manifest.json
//   attack  attack_II_<kind>/ with attacked images and a manifest each
//   detect  report_NNNN.json, detect.csv
//   eval    eval.csv, eval.json
//   tune    tune.csv, tune.json
void cmd_gen(const ExperimentConfig& cfg);
void cmd_attack(const ExperimentConfig& cfg);
void cmd_detect(const ExperimentConfig& cfg);
void cmd_eval(const ExperimentConfig& cfg);
void cmd_tune(const ExperimentConfig& cfg);

/// Loads the config, applies overrides, runs `command` and maps exceptions
/// to exit codes, printing a one-line diagnostic to `err`.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& err);

}  // namespace metr
