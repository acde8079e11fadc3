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

#ifndef TWINFILL_CONFIG_HPP_
#define TWINFILL_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "twinfill/discriminator.hpp"
#include "twinfill/generator.hpp"
#include "twinfill/losses.hpp"

namespace twinfill {

enum class Phase { kInitial, kFinetune };

std::string to_string(Phase phase);
Phase parse_phase(const std::string& text);

struct TrainConfig {
  int64_t batch_size = 6;
  double lr_initial = 2e-4;
  double lr_finetune = 5e-5;
  double d_lr_ratio = 0.1;
  double beta1 = 0.5;
  double beta2 = 0.999;
  Phase phase = Phase::kInitial;
  int64_t max_iters = 1000;
  std::uint64_t seed = 2021;
  bool nan_guard = true;
  double grad_clip = 0.0;  // 0 disables
  bool train_discriminator = true;
  int64_t checkpoint_every = 0;  // 0: only at the end
  int64_t log_every = 1;
  int64_t eval_every = 0;

  double generator_lr() const;
  double discriminator_lr() const { return generator_lr() * d_lr_ratio; }
  void validate() const;
};

struct DataConfig {
  std::string images;  // manifest file or directory; empty means synthetic
  std::string masks;   // manifest file or directory; empty means synthetic
  int64_t synthetic_samples = 64;
  std::uint64_t mask_seed = 7;
  double edge_sigma = 2.0;
  double edge_low = 0.1;
  double edge_high = 0.2;

  EdgeParams edge_params() const { return {edge_sigma, edge_low, edge_high}; }
  void validate() const;
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  int workers = 2;
  int64_t max_pixels = 4'000'000;
  std::string cors_origins = "http://localhost:5173";  // comma-separated
  int64_t target_size = 0;  // 0: the model's training size

  std::vector<std::string> cors_list() const;
  void validate() const;
};

// Every tunable of a run, addressable by flat dotted keys ("train.seed").
// Text form is one "key = value" per line with '#' comments.
struct RunConfig {
  GeneratorConfig model;  // model.levels = 0 means derive from image_size
  DiscriminatorConfig disc;
  LossWeights loss;
  std::string vgg_weights;
  std::uint64_t extractor_seed = 2021;
  TrainConfig train;
  DataConfig data;
  ServeConfig serve;

  RunConfig();

  // Throws InvalidConfig for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void merge_text(const std::string& text);
  void merge_file(const std::filesystem::path& path);
  // Each override is "key=value".
  void apply_overrides(std::span<const std::string> overrides);

  std::string to_text() const;
  GeneratorConfig generator() const;  // levels resolved
  void validate() const;
};

}  // namespace twinfill

#endif  // TWINFILL_CONFIG_HPP_
