// Copyright 2026 The Twinfill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS-IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twinfill/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "twinfill/errors.hpp"

namespace twinfill {

std::string to_string(Phase phase) {
  return phase == Phase::kInitial ? "initial" : "finetune";
}

Phase parse_phase(const std::string& text) {
  if (text == "initial") return Phase::kInitial;
  if (text == "finetune") return Phase::kFinetune;
  throw InvalidConfig("phase must be 'initial' or 'finetune', got '" + text + "'");
}

double TrainConfig::generator_lr() const {
  return phase == Phase::kInitial ? lr_initial : lr_finetune;
}

void TrainConfig::validate() const {
  if (batch_size <= 0) throw InvalidConfig("train.batch_size must be positive");
  if (!(lr_initial > 0.0) || !(lr_finetune > 0.0)) {
    throw InvalidConfig("learning rates must be positive");
  }
  if (!(lr_finetune < lr_initial)) throw InvalidConfig("train.lr_finetune must be below lr_initial");
  if (!(d_lr_ratio > 0.0)) throw InvalidConfig("train.d_lr_ratio must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidConfig("Adam betas must lie in [0,1)");
  }
  if (max_iters < 0) throw InvalidConfig("train.max_iters must be >= 0");
  if (grad_clip < 0.0) throw InvalidConfig("train.grad_clip must be >= 0");
  if (checkpoint_every < 0 || log_every <= 0 || eval_every < 0) {
    throw InvalidConfig("train intervals out of range");
  }
}

void DataConfig::validate() const {
  if (images.empty() && synthetic_samples <= 0) {
    throw InvalidConfig("data.synthetic_samples must be positive without data.images");
  }
  if (!(edge_sigma > 0.0) || !(edge_low >= 0.0) || !(edge_high >= edge_low)) {
    throw InvalidConfig("edge thresholds must satisfy 0 <= low <= high, sigma > 0");
  }
}

std::vector<std::string> ServeConfig::cors_list() const {
  std::vector<std::string> out;
  std::stringstream ss(cors_origins);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

void ServeConfig::validate() const {
  if (port < 0 || port > 65535) throw InvalidConfig("serve.port out of range");
  if (workers <= 0) throw InvalidConfig("serve.workers must be positive");
  if (max_pixels <= 0) throw InvalidConfig("serve.max_pixels must be positive");
  if (target_size < 0) throw InvalidConfig("serve.target_size must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidConfig("bad value '" + text + "' for " + key);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw InvalidConfig("non-finite value for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InvalidConfig("bad boolean '" + text + "' for " + key);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest text that still round-trips.
  for (int precision = 1; precision < 17; ++precision) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", precision, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field integer(T RunConfig::*section, auto member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*member = parse_number<std::remove_reference_t<decltype((c.*section).*member)>>(k, v);
          },
          [=](const RunConfig& c) { return std::to_string((c.*section).*member); }};
}

template <typename T>
Field real(T RunConfig::*section, double T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*member = parse_number<double>(k, v);
          },
          [=](const RunConfig& c) { return format_double((c.*section).*member); }};
}

template <typename T>
Field flag(T RunConfig::*section, bool T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*member = parse_bool(k, v);
          },
          [=](const RunConfig& c) { return std::string((c.*section).*member ? "true" : "false"); }};
}

template <typename T>
Field text(T RunConfig::*section, std::string T::*member) {
  return {[=](RunConfig& c, const std::string&, const std::string& v) { (c.*section).*member = v; },
          [=](const RunConfig& c) { return (c.*section).*member; }};
}

using FieldTable = std::vector<std::pair<std::string, Field>>;

const FieldTable& fields() {
  static const FieldTable table = [] {
    using R = RunConfig;
    using G = GeneratorConfig;
    using D = DiscriminatorConfig;
    using L = LossWeights;
    using T = TrainConfig;
    using A = DataConfig;
    using S = ServeConfig;
    FieldTable t;
    t.emplace_back("model.image_size", integer(&R::model, &G::image_size));
    t.emplace_back("model.levels", integer(&R::model, &G::levels));
    t.emplace_back("model.base_channels", integer(&R::model, &G::base_channels));
    t.emplace_back("model.max_channels", integer(&R::model, &G::max_channels));
    t.emplace_back("model.feature_channels", integer(&R::model, &G::feature_channels));
    t.emplace_back("model.two_stream", flag(&R::model, &G::two_stream));
    t.emplace_back("model.cross_borrow", flag(&R::model, &G::cross_borrow));
    t.emplace_back("model.use_bigff", flag(&R::model, &G::use_bigff));
    t.emplace_back("model.use_cfa", flag(&R::model, &G::use_cfa));
    t.emplace_back("model.multiscale_cfa", flag(&R::model, &G::multiscale_cfa));
    t.emplace_back("model.batch_norm", flag(&R::model, &G::batch_norm));
    t.emplace_back("model.width_scale", real(&R::model, &G::width_scale));
    t.emplace_back("disc.base_channels", integer(&R::disc, &D::base_channels));
    t.emplace_back("disc.head_channels", integer(&R::disc, &D::head_channels));
    t.emplace_back("loss.rec", real(&R::loss, &L::rec));
    t.emplace_back("loss.perc", real(&R::loss, &L::perc));
    t.emplace_back("loss.style", real(&R::loss, &L::style));
    t.emplace_back("loss.adv", real(&R::loss, &L::adv));
    t.emplace_back("loss.inter", real(&R::loss, &L::inter));
    t.emplace_back("loss.vgg_weights",
                   Field{[](R& c, const std::string&, const std::string& v) { c.vgg_weights = v; },
                         [](const R& c) { return c.vgg_weights; }});
    t.emplace_back("loss.extractor_seed",
                   Field{[](R& c, const std::string& k, const std::string& v) {
                           c.extractor_seed = parse_number<std::uint64_t>(k, v);
                         },
                         [](const R& c) { return std::to_string(c.extractor_seed); }});
    t.emplace_back("train.batch_size", integer(&R::train, &T::batch_size));
    t.emplace_back("train.lr_initial", real(&R::train, &T::lr_initial));
    t.emplace_back("train.lr_finetune", real(&R::train, &T::lr_finetune));
    t.emplace_back("train.d_lr_ratio", real(&R::train, &T::d_lr_ratio));
    t.emplace_back("train.beta1", real(&R::train, &T::beta1));
    t.emplace_back("train.beta2", real(&R::train, &T::beta2));
    t.emplace_back("train.phase",
                   Field{[](R& c, const std::string&, const std::string& v) {
                           c.train.phase = parse_phase(v);
                         },
                         [](const R& c) { return to_string(c.train.phase); }});
    t.emplace_back("train.max_iters", integer(&R::train, &T::max_iters));
    t.emplace_back("train.seed", integer(&R::train, &T::seed));
    t.emplace_back("train.nan_guard", flag(&R::train, &T::nan_guard));
    t.emplace_back("train.grad_clip", real(&R::train, &T::grad_clip));
    t.emplace_back("train.train_discriminator", flag(&R::train, &T::train_discriminator));
    t.emplace_back("train.checkpoint_every", integer(&R::train, &T::checkpoint_every));
    t.emplace_back("train.log_every", integer(&R::train, &T::log_every));
    t.emplace_back("train.eval_every", integer(&R::train, &T::eval_every));
    t.emplace_back("data.images", text(&R::data, &A::images));
    t.emplace_back("data.masks", text(&R::data, &A::masks));
    t.emplace_back("data.synthetic_samples", integer(&R::data, &A::synthetic_samples));
    t.emplace_back("data.mask_seed", integer(&R::data, &A::mask_seed));
    t.emplace_back("data.edge_sigma", real(&R::data, &A::edge_sigma));
    t.emplace_back("data.edge_low", real(&R::data, &A::edge_low));
    t.emplace_back("data.edge_high", real(&R::data, &A::edge_high));
    t.emplace_back("serve.host", text(&R::serve, &S::host));
    t.emplace_back("serve.port", integer(&R::serve, &S::port));
    t.emplace_back("serve.workers", integer(&R::serve, &S::workers));
    t.emplace_back("serve.max_pixels", integer(&R::serve, &S::max_pixels));
    t.emplace_back("serve.cors_origins", text(&R::serve, &S::cors_origins));
    t.emplace_back("serve.target_size", integer(&R::serve, &S::target_size));
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw InvalidConfig("unknown config key '" + key + "'");
}

}  // namespace

RunConfig::RunConfig() { model.levels = 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, key, trim(value));
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

void RunConfig::merge_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig("line " + std::to_string(number) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const InvalidConfig& e) {
      throw InvalidConfig("line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str());
}

void RunConfig::apply_overrides(std::span<const std::string> overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw InvalidConfig("override '" + o + "' is not key=value");
    set(trim(o.substr(0, eq)), o.substr(eq + 1));
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(*this) + "\n";
  return out;
}

GeneratorConfig RunConfig::generator() const {
  GeneratorConfig g = model;
  if (g.levels == 0) g.levels = GeneratorConfig::for_size(g.image_size).levels;
  return g;
}

void RunConfig::validate() const {
  generator().validate();
  disc.validate();
  loss.validate();
  train.validate();
  data.validate();
  serve.validate();
}

}  // namespace twinfill
