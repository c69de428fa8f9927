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

#include "metr/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "metr/error.hpp"
#include "metr/parallel.hpp"
#include "metr/serialization.hpp"
#include "metr/tensor_io.hpp"

namespace metr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kManifest = "manifest.json";

std::string item_name(std::size_t i, const char* what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "item_%04zu_%s.metr", i, what);
  return buf;
}

std::string report_name(std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "report_%04zu.json", i);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : ""));
  }
}

void write_json(const fs::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

fs::path input_dir(const ExperimentConfig& cfg) {
  if (cfg.input_dir.empty()) {
    throw ConfigError("config: no input directory (set 'input_dir' or pass --in)");
  }
  return cfg.input_dir;
}

json read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifest;
  if (!fs::exists(path)) throw PairingError("no " + std::string(kManifest) + " in " + dir.string());
  const auto bytes = read_file(path);
  json m = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (m.is_discarded() || !m.is_object() || !m.contains("items") || !m["items"].is_array()) {
    throw PairingError("malformed manifest " + path.string());
  }
  return m;
}

// Items listed in a manifest, validated against the directory contents.
struct ManifestItem {
  std::size_t index;
  std::string image;
  Message message;
};

std::vector<ManifestItem> manifest_items(const json& m, const fs::path& dir) {
  std::vector<ManifestItem> items;
  try {
    for (const auto& it : m.at("items")) {
      ManifestItem item{it.at("index").get<std::size_t>(), it.at("image").get<std::string>(),
                        Message::from_string(it.at("message").get<std::string>())};
      if (!fs::exists(dir / item.image)) {
        throw PairingError("manifest lists " + item.image + " but it is missing from " +
                           dir.string());
      }
      items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw PairingError(std::string("malformed manifest entry: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw PairingError(std::string("malformed manifest message: ") + e.what());
  }
  return items;
}

void check_key(const json& m, const WatermarkKey& key) {
  if (!m.contains("key") || m["key"] != to_json(key)) {
    throw PairingError("manifest key does not match the configured key");
  }
}

}  // namespace

void cmd_gen(const ExperimentConfig& cfg) {
  const Pipeline pipe = cfg.pipeline();
  ensure_dir(cfg.output_dir);
  const Rng root(cfg.seed);
  std::vector<Message> messages(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t i) {
    const Rng trial = root.fork(i);
    Rng noise_rng = trial.fork(0);
    Rng msg_rng = trial.fork(1);
    messages[i] = cfg.fixed_message ? *cfg.fixed_message
                                    : Message::random(std::size_t(pipe.key.radius), msg_rng);
    LatentTensor noise, image;
    if (cfg.watermark) {
      Generation g = generate_watermarked(noise_rng, pipe.shape, pipe.key, messages[i],
                                          pipe.predictor, pipe.schedule);
      noise = std::move(g.noise_wm);
      image = std::move(g.image);
    } else {
      noise = sample_gaussian(noise_rng, pipe.shape);
      image = ddim_sample(noise, pipe.predictor, pipe.schedule);
    }
    write_tensor(cfg.output_dir / item_name(i, "noise"), noise);
    write_tensor(cfg.output_dir / item_name(i, "image"), image);
  });

  json items = json::array();
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    items.push_back({{"index", i},
                     {"noise", item_name(i, "noise")},
                     {"image", item_name(i, "image")},
                     {"message", messages[i].to_string()},
                     {"watermarked", cfg.watermark}});
  }
  write_json(cfg.output_dir / kManifest,
             {{"seed", cfg.seed},
              {"key", to_json(pipe.key)},
              {"predictor", predictor_name(pipe.predictor)},
              {"watermark", cfg.watermark},
              {"attack", to_json(AttackSpec{NoAttack{}})},
              {"items", items}});
}

void cmd_attack(const ExperimentConfig& cfg) {
  const Pipeline pipe = cfg.pipeline();
  const fs::path in = input_dir(cfg);
  const json manifest = read_manifest(in);
  const auto items = manifest_items(manifest, in);
  const Rng root(cfg.seed);

  for (std::size_t a = 0; a < cfg.attacks.size(); ++a) {
    const AttackSpec& spec = cfg.attacks[a];
    char sub[64];
    std::snprintf(sub, sizeof sub, "attack_%02zu_%s", a, attack_kind(spec).c_str());
    const fs::path dir = cfg.output_dir / sub;
    ensure_dir(dir);
    const std::uint64_t sid = stream_id(attack_label(spec));
    parallel_for(items.size(), [&](std::size_t k) {
      const LatentTensor img = read_latent(in / items[k].image);
      if (img.shape() != pipe.shape) {
        throw PairingError(items[k].image + " does not have the configured shape");
      }
      Rng rng = root.fork(items[k].index).fork(sid);
      write_tensor(dir / items[k].image, apply_attack(img, spec, rng, pipe.predictor, pipe.schedule));
    });
    json m = manifest;
    m["attack"] = to_json(spec);
    for (auto& it : m["items"]) it.erase("noise");
    write_json(dir / kManifest, m);
  }
}

void cmd_detect(const ExperimentConfig& cfg) {
  const Pipeline pipe = cfg.pipeline();
  const fs::path in = input_dir(cfg);
  const json manifest = read_manifest(in);
  check_key(manifest, pipe.key);
  const auto items = manifest_items(manifest, in);
  if (items.empty()) throw PairingError("manifest lists no items");
  ensure_dir(cfg.output_dir);

  std::vector<DetectionReport> reports(items.size());
  parallel_for(items.size(), [&](std::size_t k) {
    const LatentTensor img = read_latent(in / items[k].image);
    if (img.shape() != pipe.shape) {
      throw PairingError(items[k].image + " does not have the configured shape");
    }
    if (items[k].message.size() != std::size_t(pipe.key.radius)) {
      throw PairingError("manifest message for item " + std::to_string(items[k].index) +
                         " does not match r");
    }
    reports[k] = detect_message(img, pipe.key, pipe.predictor, pipe.schedule, pipe.p0,
                                &items[k].message);
  });

  std::vector<Message> truth, decoded;
  std::size_t present = 0;
  double p_sum = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    json j = to_json(reports[k]);
    j["index"] = items[k].index;
    j["image"] = items[k].image;
    j["reference"] = items[k].message.to_string();
    write_json(cfg.output_dir / report_name(items[k].index), j);
    truth.push_back(items[k].message);
    decoded.push_back(reports[k].bits);
    present += reports[k].present;
    p_sum += reports[k].p_value_or_one();
  }
  const double n = double(items.size());
  std::ostringstream csv;
  csv << "items,presence_rate,bit_acc,word_acc,mean_p_value\n"
      << items.size() << ',' << format_number(double(present) / n) << ','
      << format_number(bit_accuracy(truth, decoded)) << ','
      << format_number(word_accuracy(truth, decoded)) << ',' << format_number(p_sum / n) << '\n';
  write_file_atomic(cfg.output_dir / "detect.csv", csv.str());
}

void cmd_eval(const ExperimentConfig& cfg) {
  const Pipeline pipe = cfg.pipeline();
  ensure_dir(cfg.output_dir);
  const auto results = evaluate_attacks(pipe, cfg.attacks, cfg.trials, cfg.seed, cfg.fixed_message);

  std::ostringstream csv;
  csv << "attack,auc,tpr@1%fpr,bit_acc,word_acc,mean_R_det\n";
  json summaries = json::array();
  for (const auto& r : results) {
    const EvalSummary& s = r.summary;
    csv << csv_field(s.attack) << ',' << format_number(s.auc) << ','
        << format_number(s.tpr_at_1pct_fpr) << ',' << format_number(s.bit_accuracy) << ','
        << format_number(s.word_accuracy) << ',' << format_number(s.mean_detection_resolution)
        << '\n';
    json trials = json::array();
    for (const auto& t : r.trials) trials.push_back(to_json(t));
    json entry = to_json(s);
    entry["spec"] = to_json(r.attack);
    entry["records"] = std::move(trials);
    summaries.push_back(std::move(entry));
  }
  write_file_atomic(cfg.output_dir / "eval.csv", csv.str());
  write_json(cfg.output_dir / "eval.json",
             {{"seed", cfg.seed},
              {"key", to_json(pipe.key)},
              {"predictor", predictor_name(pipe.predictor)},
              {"steps", cfg.steps},
              {"p0", pipe.p0},
              {"attacks", summaries}});
}

void cmd_tune(const ExperimentConfig& cfg) {
  const Pipeline pipe = cfg.pipeline();
  ensure_dir(cfg.output_dir);
  const ScalerSelection sel = select_scaler(cfg.tune, pipe, cfg.seed);

  std::ostringstream csv;
  csv << "S,R_det,denominator,ratio,criterion_pass,distortion,quality_pass,selected\n";
  json trace = json::array();
  for (const auto& r : sel.trace) {
    csv << format_number(r.scaler) << ',' << format_number(r.detection_resolution) << ','
        << (r.criterion ? format_number(r.criterion->denominator) : "") << ','
        << (r.criterion ? format_number(r.criterion->ratio) : "") << ','
        << (r.criterion && r.criterion->pass ? 1 : 0) << ','
        << (r.distortion ? format_number(*r.distortion) : "") << ',' << (r.quality_pass ? 1 : 0)
        << ',' << (r.selected ? 1 : 0) << '\n';
    trace.push_back(to_json(r));
  }
  write_file_atomic(cfg.output_dir / "tune.csv", csv.str());
  write_json(cfg.output_dir / "tune.json",
             {{"seed", cfg.seed},
              {"predictor", predictor_name(pipe.predictor)},
              {"selected_S", sel.scaler ? json(*sel.scaler) : json(nullptr)},
              {"quality_budget", std::isinf(cfg.tune.quality_budget)
                                     ? json(nullptr)
                                     : json(cfg.tune.quality_budget)},
              {"trace", trace}});
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& err) {
  try {
    ExperimentConfig cfg = load_config(opts.config);
    if (opts.out) cfg.output_dir = *opts.out;
    if (opts.in) cfg.input_dir = *opts.in;
    if (opts.seed) cfg.seed = *opts.seed;
    if (command == "gen") cmd_gen(cfg);
    else if (command == "attack") cmd_attack(cfg);
    else if (command == "detect") cmd_detect(cfg);
    else if (command == "eval") cmd_eval(cfg);
    else if (command == "tune") cmd_tune(cfg);
    else throw ConfigError("unknown command '" + command + "'");
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "metr: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "metr: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "metr: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "metr: " << e.what() << '\n';
    return kExitIo;
  } catch (const PairingError& e) {
    err << "metr: pairing error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "metr: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace metr
