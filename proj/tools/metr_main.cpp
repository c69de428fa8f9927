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

#include <iostream>
#include <utility>

#include "CLI11.hpp"
#include "metr/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"METR ring watermark toolkit"};
  app.require_subcommand(1, 1);

  metr::CommandOptions opts;
  std::string out, in;
  std::uint64_t seed = 0;
  const std::pair<const char*, const char*> commands[] = {
      {"gen", "sample watermarked (or plain) images and write a manifest"},
      {"attack", "apply the configured attacks to a generated set"},
      {"detect", "invert, test and decode every image in a set"},
      {"eval", "run the full attack evaluation and write eval.csv"},
      {"tune", "search the scaler grid and write tune.csv"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "experiment JSON")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--in", in, "input directory (attack, detect)");
    sub->add_option("--seed", seed, "override the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : metr::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--out")) opts.out = out;
  if (sub->count("--in")) opts.in = in;
  if (sub->count("--seed")) opts.seed = seed;
  return metr::run_command(sub->get_name(), opts, std::cerr);
}
