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

#include "metr/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "metr/error.hpp"

namespace metr {
namespace {

using json = nlohmann::json;

// Input iterator that publishes how far the lexer has read, so SAX events
// can be tagged with byte offsets.
class TrackingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator(const char* p, const char* base, std::size_t* mark)
      : p_(p), base_(base), mark_(mark) {}
  reference operator*() const { return *p_; }
  TrackingIterator& operator++() {
    ++p_;
    *mark_ = static_cast<std::size_t>(p_ - base_);
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const TrackingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const TrackingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  const char* base_;
  std::size_t* mark_;
};

using Offsets = std::map<std::string, std::size_t>;

std::string pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

class PositionSax {
 public:
  PositionSax(json& root, const std::size_t* offset, Offsets& where)
      : dom_(root, true), offset_(offset), where_(where) {}

  bool null() { mark(); return dom_.null(); }
  bool boolean(bool v) { mark(); return dom_.boolean(v); }
  bool number_integer(json::number_integer_t v) { mark(); return dom_.number_integer(v); }
  bool number_unsigned(json::number_unsigned_t v) { mark(); return dom_.number_unsigned(v); }
  bool number_float(json::number_float_t v, const std::string& s) {
    mark();
    return dom_.number_float(v, s);
  }
  bool string(std::string& v) { mark(); return dom_.string(v); }
  bool binary(json::binary_t& v) { mark(); return dom_.binary(v); }
  bool start_object(std::size_t n) {
    stack_.push_back({false, 0, mark()});
    return dom_.start_object(n);
  }
  bool key(std::string& k) {
    pending_ = stack_.back().path + "/" + pointer_token(k);
    where_[pending_] = *offset_;
    return dom_.key(k);
  }
  bool end_object() {
    stack_.pop_back();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    stack_.push_back({true, 0, mark()});
    return dom_.start_array(n);
  }
  bool end_array() {
    stack_.pop_back();
    return dom_.end_array();
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) {
    std::string msg = ex.what();
    const auto cut = msg.find("] ");
    if (cut != std::string::npos) msg = msg.substr(cut + 2);
    throw ConfigError("config: " + msg);
  }

 private:
  struct Frame {
    bool array;
    std::size_t index;
    std::string path;
  };

  std::string mark() {
    std::string path;
    if (stack_.empty()) {
      path = "";
    } else if (stack_.back().array) {
      path = stack_.back().path + "/" + std::to_string(stack_.back().index++);
    } else {
      path = pending_;
    }
    where_.emplace(path, *offset_);
    return path;
  }

  nlohmann::detail::json_sax_dom_parser<json> dom_;
  const std::size_t* offset_;
  Offsets& where_;
  std::vector<Frame> stack_;
  std::string pending_;
};

class Node {
 public:
  Node(const json& j, std::string path, const Offsets& where, const std::string& text)
      : j_(j), path_(std::move(path)), where_(where), text_(text) {}

  [[noreturn]] void fail(const std::string& what) const {
    std::string loc = path_.empty() ? "/" : path_;
    const auto it = where_.find(path_);
    if (it != where_.end()) {
      const std::size_t end = std::min(it->second, text_.size());
      const auto line = 1 + std::count(text_.begin(), text_.begin() + long(end), '\n');
      loc += " (line " + std::to_string(line) + ")";
    }
    throw ConfigError("config: " + loc + ": " + what);
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  bool has(const char* name) const { return j_.contains(name); }

  Node at(const char* name) const {
    return {j_.at(name), path_ + "/" + pointer_token(name), where_, text_};
  }
  Node at(std::size_t i) const {
    return {j_.at(i), path_ + "/" + std::to_string(i), where_, text_};
  }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) at(k.c_str()).fail("unknown key '" + k + "'");
    }
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  std::uint64_t unsigned_int() const {
    if (!j_.is_number_unsigned()) fail("expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }
  int small_int() const {
    const auto v = unsigned_int();
    if (v > 1'000'000) fail("value too large");
    return int(v);
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
  const Offsets& where_;
  const std::string& text_;
};

// Runs a validator, reporting its InvalidArgument at `node`.
template <class F>
void checked(const Node& node, F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    node.fail(e.what());
  }
}

PredictorConfig read_predictor(const Node& n) {
  PredictorConfig p;
  if (!n.raw().is_object() || !n.has("kind")) n.fail("predictor needs a 'kind'");
  p.kind = n.at("kind").string();
  if (p.kind == "zero") {
    n.expect_object({"kind"});
  } else if (p.kind == "linear") {
    n.expect_object({"kind", "coefficients", "coefficient"});
    if (n.has("coefficients") == n.has("coefficient")) {
      n.fail("linear predictor needs exactly one of 'coefficients' or 'coefficient'");
    }
    if (n.has("coefficients")) {
      const Node c = n.at("coefficients");
      if (!c.raw().is_array()) c.fail("expected an array of numbers");
      for (std::size_t i = 0; i < c.raw().size(); ++i) p.coefficients.push_back(c.at(i).number());
    } else {
      p.coefficients.push_back(n.at("coefficient").number());  // expanded to T entries later
    }
  } else if (p.kind == "gaussian_prior") {
    n.expect_object({"kind", "prior_variance", "content"});
    if (n.has("prior_variance")) p.prior_variance = n.at("prior_variance").number();
    if (n.has("content")) {
      const Node c = n.at("content");
      c.expect_object({"amplitude", "min_radius", "seed"});
      if (c.has("amplitude")) p.content_amplitude = c.at("amplitude").number();
      if (c.has("min_radius")) p.content_min_radius = c.at("min_radius").number();
      if (c.has("seed")) p.content_seed = c.at("seed").unsigned_int();
    }
  } else {
    n.at("kind").fail("unknown predictor kind '" + p.kind + "'");
  }
  return p;
}

AttackSpec read_attack(const Node& n) {
  n.expect_object({"kind", "params"});
  if (!n.has("kind")) n.fail("attack needs a 'kind'");
  const std::string kind = n.at("kind").string();
  static const json empty = json::object();
  static const Offsets no_offsets;
  static const std::string no_text;
  const Node params =
      n.has("params") ? n.at("params") : Node(empty, n.path() + "/params", no_offsets, no_text);
  auto param = [&](const char* name, double fallback) {
    return params.has(name) ? params.at(name).number() : fallback;
  };
  AttackSpec spec;
  if (kind == "none") {
    params.expect_object({});
    spec = NoAttack{};
  } else if (kind == "rotate") {
    params.expect_object({"degrees"});
    spec = Rotate{param("degrees", 75.0)};
  } else if (kind == "jpeg") {
    params.expect_object({"quality"});
    spec = Jpeg{params.has("quality") ? params.at("quality").small_int() : 25};
  } else if (kind == "crop_scale") {
    params.expect_object({"keep"});
    spec = CropScale{param("keep", 0.75)};
  } else if (kind == "blur") {
    params.expect_object({"radius"});
    spec = Blur{param("radius", 4.0)};
  } else if (kind == "gaussian_noise") {
    params.expect_object({"sigma"});
    spec = GaussianNoise{param("sigma", 0.1)};
  } else if (kind == "brightness") {
    params.expect_object({"factor"});
    spec = Brightness{param("factor", 6.0)};
  } else if (kind == "diffusion_regen") {
    params.expect_object({"step"});
    spec = DiffusionRegen{params.has("step") ? params.at("step").small_int() : 10};
  } else if (kind == "lowpass_recon") {
    params.expect_object({"keep"});
    spec = LowpassRecon{param("keep", 0.5)};
  } else {
    n.at("kind").fail("unknown attack kind '" + kind + "'");
  }
  checked(n, [&] { validate_attack(spec); });
  return spec;
}

}  // namespace

Pipeline ExperimentConfig::pipeline() const {
  Pipeline p;
  p.shape = shape;
  p.key = key;
  p.key.height = shape.height;
  p.key.width = shape.width;
  p.schedule = make_schedule(steps, beta_start, beta_end);
  p.p0 = p0;
  if (predictor.kind == "zero") {
    p.predictor = ZeroPredictor{};
  } else if (predictor.kind == "linear") {
    std::vector<double> c = predictor.coefficients;
    if (c.size() == 1 && steps > 1) c.assign(std::size_t(steps), c[0]);
    p.predictor = LinearPredictor{std::move(c)};
  } else if (predictor.kind == "gaussian_prior") {
    p.predictor = make_gaussian_prior(shape, predictor.prior_variance,
                                      predictor.content_amplitude,
                                      predictor.content_min_radius, predictor.content_seed);
  } else {
    throw InvalidArgument("unknown predictor kind '" + predictor.kind + "'");
  }
  p.validate();
  return p;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  Offsets where;
  std::size_t offset = 0;
  PositionSax sax(root, &offset, where);
  const char* base = text.data();
  json::sax_parse(TrackingIterator(base, base, &offset),
                  TrackingIterator(base + text.size(), base, &offset), &sax);

  const Node top(root, "", where, text);
  top.expect_object({"seed", "shape", "schedule", "predictor", "key", "message", "watermark",
                     "attacks", "p0", "trials", "output_dir", "input_dir", "tune",
                     "g_criterion"});
  ExperimentConfig cfg;
  if (top.has("seed")) cfg.seed = top.at("seed").unsigned_int();
  if (top.has("shape")) {
    const Node n = top.at("shape");
    n.expect_object({"channels", "height", "width"});
    if (n.has("channels")) cfg.shape.channels = std::size_t(n.at("channels").small_int());
    if (n.has("height")) cfg.shape.height = std::size_t(n.at("height").small_int());
    if (n.has("width")) cfg.shape.width = std::size_t(n.at("width").small_int());
    if (cfg.shape.size() == 0) n.fail("dimensions must be positive");
    if (cfg.shape.size() > (std::size_t{1} << 26)) n.fail("tensor too large");
  }
  if (top.has("schedule")) {
    const Node n = top.at("schedule");
    n.expect_object({"steps", "beta_start", "beta_end"});
    if (n.has("steps")) cfg.steps = n.at("steps").small_int();
    if (n.has("beta_start")) cfg.beta_start = n.at("beta_start").number();
    if (n.has("beta_end")) cfg.beta_end = n.at("beta_end").number();
    checked(n, [&] { make_schedule(cfg.steps, cfg.beta_start, cfg.beta_end); });
  }
  const Node pred_node = top.has("predictor") ? top.at("predictor") : top;
  if (top.has("predictor")) cfg.predictor = read_predictor(pred_node);
  const Node key_node = top.has("key") ? top.at("key") : top;
  if (top.has("key")) {
    key_node.expect_object({"r", "S", "channel"});
    if (key_node.has("r")) cfg.key.radius = key_node.at("r").small_int();
    if (key_node.has("S")) cfg.key.scaler = key_node.at("S").number();
    if (key_node.has("channel")) cfg.key.channel = std::size_t(key_node.at("channel").small_int());
  }
  cfg.key.height = cfg.shape.height;
  cfg.key.width = cfg.shape.width;
  checked(key_node, [&] {
    cfg.key.validate();
    if (cfg.key.channel >= cfg.shape.channels) {
      throw InvalidArgument("channel must be < shape.channels");
    }
  });
  if (top.has("message")) {
    const Node n = top.at("message");
    n.expect_object({"mode", "bits"});
    const std::string mode = n.has("mode") ? n.at("mode").string() : "random";
    if (mode == "fixed") {
      if (!n.has("bits")) n.fail("fixed message needs 'bits'");
      const Node b = n.at("bits");
      checked(b, [&] { cfg.fixed_message = Message::from_string(b.string()); });
      if (cfg.fixed_message->size() != std::size_t(cfg.key.radius)) {
        b.fail("message length " + std::to_string(cfg.fixed_message->size()) +
               " does not match r = " + std::to_string(cfg.key.radius));
      }
    } else if (mode == "random") {
      if (n.has("bits")) n.at("bits").fail("'bits' is only allowed with mode 'fixed'");
    } else {
      n.at("mode").fail("mode must be 'random' or 'fixed'");
    }
  }
  if (top.has("watermark")) cfg.watermark = top.at("watermark").boolean();
  if (top.has("attacks")) {
    const Node n = top.at("attacks");
    if (!n.raw().is_array() || n.raw().empty()) n.fail("expected a non-empty array");
    cfg.attacks.clear();
    for (std::size_t i = 0; i < n.raw().size(); ++i) cfg.attacks.push_back(read_attack(n.at(i)));
  }
  if (top.has("p0")) {
    cfg.p0 = top.at("p0").number();
    if (!(cfg.p0 > 0.0 && cfg.p0 < 1.0)) top.at("p0").fail("p0 must be in (0, 1)");
  }
  if (top.has("trials")) {
    cfg.trials = top.at("trials").unsigned_int();
    if (cfg.trials == 0 || cfg.trials > 1'000'000) top.at("trials").fail("trials must be in [1, 1e6]");
  }
  if (top.has("output_dir")) cfg.output_dir = top.at("output_dir").string();
  if (top.has("input_dir")) cfg.input_dir = top.at("input_dir").string();
  if (top.has("tune")) {
    const Node n = top.at("tune");
    n.expect_object({"s_min", "s_max", "s_step", "quality_budget", "trials"});
    if (n.has("s_min")) cfg.tune.s_min = n.at("s_min").number();
    if (n.has("s_max")) cfg.tune.s_max = n.at("s_max").number();
    if (n.has("s_step")) cfg.tune.s_step = n.at("s_step").number();
    if (n.has("quality_budget") && !n.at("quality_budget").raw().is_null()) {
      cfg.tune.quality_budget = n.at("quality_budget").number();
    }
    if (n.has("trials")) cfg.tune.trials = n.at("trials").unsigned_int();
    checked(n, [&] { cfg.tune.validate(); });
  }
  if (top.has("g_criterion")) {
    const Node n = top.at("g_criterion");
    n.expect_object({"k", "b"});
    if (n.has("k")) cfg.tune.consts.k = n.at("k").number();
    if (n.has("b")) cfg.tune.consts.b = n.at("b").number();
  }
  checked(pred_node, [&] { cfg.pipeline(); });
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace metr
