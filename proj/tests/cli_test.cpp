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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metr/config.hpp"
#include "metr/serialization.hpp"
#include "metr/tensor_io.hpp"

namespace metr {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("metr_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct CliRun {
  int code;
  std::string err;
};

CliRun metr_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(METR_CLI_PATH) + " " + args + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string expect_config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError for " << text;
  return "";
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(ConfigTest, Defaults) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c.key.radius, 10);
  EXPECT_EQ(c.key.scaler, 100.0);
  EXPECT_EQ(c.steps, 40);
  EXPECT_EQ(c.p0, 0.01);
  EXPECT_EQ(c.predictor.kind, "zero");
  EXPECT_EQ(c.attacks.size(), 1u);
}

TEST(ConfigTest, FullDocument) {
  const ExperimentConfig c = parse_config(R"({
    "seed": 7,
    "shape": {"channels": 2, "height": 32, "width": 48},
    "schedule": {"steps": 20, "beta_start": 0.0002, "beta_end": 0.03},
    "predictor": {"kind": "linear", "coefficient": 0.01},
    "key": {"r": 6, "S": 80, "channel": 1},
    "message": {"mode": "fixed", "bits": "101101"},
    "attacks": [{"kind": "blur", "params": {"radius": 2}}, {"kind": "jpeg"}],
    "trials": 4, "p0": 0.05,
    "tune": {"s_min": 20, "s_max": 60, "s_step": 20, "quality_budget": 30, "trials": 2},
    "g_criterion": {"k": -0.001, "b": 0.5}
  })");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.shape, (Shape{2, 32, 48}));
  EXPECT_EQ(c.key.channel, 1u);
  EXPECT_EQ(c.fixed_message->to_string(), "101101");
  ASSERT_EQ(c.attacks.size(), 2u);
  EXPECT_EQ(attack_label(c.attacks[0]), "blur r=2");
  EXPECT_EQ(attack_label(c.attacks[1]), "JPEG 25");
  EXPECT_EQ(c.tune.quality_budget, 30.0);
  EXPECT_EQ(c.tune.consts.k, -0.001);
  const Pipeline p = c.pipeline();
  EXPECT_EQ(std::get<LinearPredictor>(p.predictor).coefficients.size(), 20u);
}

TEST(ConfigTest, ErrorsNameLineAndPath) {
  const std::string unknown = expect_config_error("{\n  \"seed\": 1,\n  \"sede\": 2\n}");
  EXPECT_NE(unknown.find("line 3"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("sede"), std::string::npos) << unknown;

  const std::string radius =
      expect_config_error("{\n\"key\": {\n  \"r\": 32\n}\n}");
  EXPECT_NE(radius.find("min(H/2, W/2)"), std::string::npos) << radius;
  EXPECT_NE(radius.find("/key"), std::string::npos) << radius;
  EXPECT_NE(radius.find("line 2"), std::string::npos) << radius;

  const std::string syntax = expect_config_error("{\n  \"seed\": 1,\n  \"trials\": }\n");
  EXPECT_NE(syntax.find("line 3"), std::string::npos) << syntax;

  const std::string nested = expect_config_error(
      "{\"attacks\": [\n {\"kind\": \"blur\"},\n {\"kind\": \"jpeg\", \"params\": {\"quality\": 0}}\n]}");
  EXPECT_NE(nested.find("/attacks/1"), std::string::npos) << nested;
  EXPECT_NE(nested.find("line 3"), std::string::npos) << nested;

  expect_config_error(R"({"attacks": [{"kind": "blur", "params": {"sigma": 1}}]})");
  expect_config_error(R"({"attacks": [{"kind": "warp"}]})");
  expect_config_error(R"({"message": {"mode": "fixed", "bits": "101"}})");
  expect_config_error(R"({"predictor": {"kind": "linear", "coefficients": [0.1, 0.2]}})");
  expect_config_error(R"({"predictor": {"kind": "gaussian_prior", "prior_variance": -1}})");
  expect_config_error(R"({"trials": -3})");
  expect_config_error(R"({"trials": 1.5})");
  expect_config_error(R"({"p0": 1.5})");
  expect_config_error(R"({"schedule": {"beta_end": 1.0}})");
  expect_config_error(R"({"key": {"channel": 1}})");
  expect_config_error(R"([1, 2])");
}

TEST(FormatTest, SixSignificantDigits) {
  EXPECT_EQ(format_number(0.123456789), "0.123457");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(99.06494), "99.0649");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1234567.0), "1.23457e+06");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fresh_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  fs::path config(const std::string& body) {
    const fs::path p = dir_ / "config.json";
    put(p, body);
    return p;
  }
  fs::path dir_;
};

TEST_F(CliTest, GenWritesItemsDeterministically) {
  const fs::path cfg = config(R"({"seed": 3, "trials": 3})");
  const fs::path out1 = dir_ / "a", out2 = dir_ / "b";
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --out " + out1.string(), dir_).code, 0);
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --out " + out2.string(), dir_).code, 0);
  std::size_t images = 0, noises = 0, manifests = 0, other = 0;
  for (const auto& e : fs::directory_iterator(out1)) {
    const std::string n = e.path().filename().string();
    if (n.ends_with("_image.metr")) ++images;
    else if (n.ends_with("_noise.metr")) ++noises;
    else if (n == "manifest.json") ++manifests;
    else ++other;
    EXPECT_EQ(slurp(e.path()), slurp(out2 / n)) << n;
  }
  EXPECT_EQ(images, 3u);
  EXPECT_EQ(noises, 3u);
  EXPECT_EQ(manifests, 1u);
  EXPECT_EQ(other, 0u);
  const auto m = nlohmann::json::parse(slurp(out1 / "manifest.json"));
  EXPECT_EQ(m["items"].size(), 3u);
  EXPECT_EQ(m["key"]["r"], 10);
  EXPECT_EQ(m["items"][0]["message"].get<std::string>().size(), 10u);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  const CliRun bad_r = metr_cli("gen --config " + config(R"({"key": {"r": 40}})").string(), dir_);
  EXPECT_EQ(bad_r.code, 2);
  EXPECT_NE(bad_r.err.find("min(H/2, W/2)"), std::string::npos) << bad_r.err;

  const CliRun unknown = metr_cli("eval --config " + config("{\n\"trails\": 4\n}").string(), dir_);
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("line 2"), std::string::npos) << unknown.err;

  EXPECT_EQ(metr_cli("eval", dir_).code, 2);
  EXPECT_EQ(metr_cli("frobnicate --config x", dir_).code, 2);
  EXPECT_EQ(metr_cli("eval --config " + (dir_ / "missing.json").string(), dir_).code, 3);
}

TEST_F(CliTest, UnwritableOutputExitThree) {
  put(dir_ / "blocker", "x");
  const fs::path cfg = config(R"({"trials": 1})");
  const CliRun r = metr_cli("gen --config " + cfg.string() + " --out " + (dir_ / "blocker" / "sub").string(), dir_);
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(CliTest, DetectCleanAndPairing) {
  const fs::path cfg = config(R"({"trials": 4})");
  const fs::path gen = dir_ / "gen", det = dir_ / "det";
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --out " + gen.string(), dir_).code, 0);
  const CliRun r = metr_cli("detect --config " + cfg.string() + " --in " + gen.string() + " --out " + det.string(), dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(det / "detect.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "items,presence_rate,bit_acc,word_acc,mean_p_value");
  EXPECT_EQ(rows[1].substr(0, 8), "4,1,1,1,");
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(fs::exists(det / ("report_000" + std::to_string(i) + ".json")));

  const CliRun missing = metr_cli("detect --config " + cfg.string() + " --in " + det.string() + " --out " + (dir_ / "x").string(), dir_);
  EXPECT_NE(missing.code, 0);
  EXPECT_NE(missing.err.find("pairing"), std::string::npos) << missing.err;

  fs::remove(gen / "item_0002_image.metr");
  const CliRun broken = metr_cli("detect --config " + cfg.string() + " --in " + gen.string() + " --out " + det.string(), dir_);
  EXPECT_NE(broken.code, 0);
  EXPECT_NE(broken.err.find("item_0002_image.metr"), std::string::npos) << broken.err;

  const fs::path other_key = dir_ / "other.json";
  put(other_key, R"({"key": {"S": 50}})");
  fs::remove_all(gen);
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --out " + gen.string(), dir_).code, 0);
  EXPECT_NE(metr_cli("detect --config " + other_key.string() + " --in " + gen.string() + " --out " + det.string(), dir_).code, 0);
}

TEST_F(CliTest, DetectPlainPresenceNearThreshold) {
  const fs::path cfg = config(R"({"trials": 300, "watermark": false, "seed": 12})");
  const fs::path gen = dir_ / "gen", det = dir_ / "det";
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --out " + gen.string(), dir_).code, 0);
  ASSERT_EQ(metr_cli("detect --config " + cfg.string() + " --in " + gen.string() + " --out " + det.string(), dir_).code, 0);
  const auto rows = lines(slurp(det / "detect.csv"));
  const double rate = std::stod(rows[1].substr(rows[1].find(',') + 1));
  // Binomial(300, 0.01): mean 3, well under 12 with overwhelming probability.
  EXPECT_LE(rate, 0.04);
}

TEST_F(CliTest, AttackNoneIsBitIdentical) {
  const fs::path cfg = config(R"({"trials": 2, "attacks": [{"kind": "none"}, {"kind": "blur", "params": {"radius": 4}}]})");
  const fs::path gen = dir_ / "gen", att = dir_ / "att";
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --out " + gen.string(), dir_).code, 0);
  const CliRun r = metr_cli("attack --config " + cfg.string() + " --in " + gen.string() + " --out " + att.string(), dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  for (int i = 0; i < 2; ++i) {
    const std::string name = "item_000" + std::to_string(i) + "_image.metr";
    EXPECT_EQ(slurp(att / "attack_00_none" / name), slurp(gen / name));
    EXPECT_NE(slurp(att / "attack_01_blur" / name), slurp(gen / name));
  }
  const fs::path det = dir_ / "det";
  ASSERT_EQ(metr_cli("detect --config " + cfg.string() + " --in " + (att / "attack_01_blur").string() + " --out " + det.string(), dir_).code, 0);
}

TEST_F(CliTest, EvalTableShape) {
  const fs::path cfg = config(R"({
    "trials": 6,
    "predictor": {"kind": "gaussian_prior"},
    "attacks": [
      {"kind": "none"},
      {"kind": "rotate", "params": {"degrees": 75}},
      {"kind": "jpeg", "params": {"quality": 25}},
      {"kind": "crop_scale", "params": {"keep": 0.75}},
      {"kind": "blur", "params": {"radius": 4}},
      {"kind": "gaussian_noise", "params": {"sigma": 0.1}},
      {"kind": "brightness", "params": {"factor": 6}},
      {"kind": "diffusion_regen", "params": {"step": 10}},
      {"kind": "lowpass_recon", "params": {"keep": 0.5}}
    ]})");
  const CliRun r = metr_cli("eval --config " + cfg.string() + " --out " + dir_.string(), dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir_ / "eval.csv"));
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0], "attack,auc,tpr@1%fpr,bit_acc,word_acc,mean_R_det");
  EXPECT_EQ(rows[1].substr(0, 10), "No attack,");
  const auto sidecar = nlohmann::json::parse(slurp(dir_ / "eval.json"));
  EXPECT_EQ(sidecar["attacks"].size(), 9u);
  EXPECT_EQ(sidecar["attacks"][0]["records"].size(), 6u);
}

TEST_F(CliTest, TuneTraceHasOneRowPerScaler) {
  const fs::path cfg = config(R"({"tune": {"trials": 2}})");
  const CliRun r = metr_cli("tune --config " + cfg.string() + " --out " + dir_.string(), dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir_ / "tune.csv"));
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[1].substr(0, 3), "60,");
  EXPECT_EQ(rows[11].substr(0, 4), "160,");
  const auto j = nlohmann::json::parse(slurp(dir_ / "tune.json"));
  EXPECT_EQ(j["selected_S"], 60.0);
}

TEST_F(CliTest, SeedOverrideChangesOutput) {
  const fs::path cfg = config(R"({"trials": 1})");
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --out " + (dir_ / "a").string(), dir_).code, 0);
  ASSERT_EQ(metr_cli("gen --config " + cfg.string() + " --seed 99 --out " + (dir_ / "b").string(), dir_).code, 0);
  EXPECT_NE(slurp(dir_ / "a" / "item_0000_image.metr"), slurp(dir_ / "b" / "item_0000_image.metr"));
}

}  // namespace
}  // namespace metr
