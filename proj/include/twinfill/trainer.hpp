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

#ifndef TWINFILL_TRAINER_HPP_
#define TWINFILL_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/optim/adam.h>

#include "twinfill/archive.hpp"
#include "twinfill/config.hpp"
#include "twinfill/datapipe.hpp"
#include "twinfill/discriminator.hpp"
#include "twinfill/generator.hpp"
#include "twinfill/losses.hpp"
#include "twinfill/metrics.hpp"

namespace twinfill {

inline constexpr int64_t kCheckpointVersion = 1;

struct StepRecord {
  int64_t iteration = 0;  // 1-based index of the completed step
  Phase phase = Phase::kInitial;
  double lr_generator = 0.0;
  double lr_discriminator = 0.0;
  double rec = 0.0;
  double perc = 0.0;
  double style = 0.0;
  double adv_generator = 0.0;
  double adv_discriminator = 0.0;
  double inter = 0.0;
  double total = 0.0;
  double hole_l1 = 0.0;       // mean |I_out - I_gt| over hole pixels
  double hole_percent = 0.0;  // batch mean
  double known_percent = 0.0;

  nlohmann::json to_json() const;
};

struct FitOptions {
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::filesystem::path log_path;        // empty: no JSONL log
  std::function<void(const StepRecord&)> on_step;
};

// Generator, discriminator, both Adam optimizers and the iteration counter.
// Weight init draws from the torch RNG seeded with train.seed, and batch
// composition is a pure function of (seed, iteration), so a resumed run
// replays the uninterrupted one exactly.
class Trainer {
 public:
  explicit Trainer(RunConfig config, std::shared_ptr<FeatureExtractor> extractor = nullptr);

  // Evaluates every loss against the current networks, then applies one
  // generator update on the joint loss and one discriminator update on
  // (real, detached fake). With the NaN guard on, a non-finite loss throws
  // NumericError and leaves parameters, buffers and optimizers untouched.
  StepRecord step(const Batch& batch);

  Batch batch_for(std::span<const Sample> data, int64_t iteration) const;
  static std::vector<std::size_t> batch_indices(std::uint64_t seed, int64_t iteration,
                                                int64_t batch_size, std::size_t n);

  // Steps until train.max_iters.
  void fit(std::span<const Sample> data, const FitOptions& options = {});

  void set_max_iters(int64_t n) { config_.train.max_iters = n; }

  // Switches learning rates and the batch-norm freeze.
  void set_phase(Phase phase);

  TensorArchive checkpoint() const;
  void save_checkpoint(const std::filesystem::path& path) const;
  // Validates the whole file against this trainer's layout before copying
  // anything; on error the trainer is untouched.
  void restore(const TensorArchive& archive);
  static std::unique_ptr<Trainer> load_checkpoint(const std::filesystem::path& path,
                                                  std::shared_ptr<FeatureExtractor> extractor = nullptr);

  InpaintGenerator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const RunConfig& config() const { return config_; }
  int64_t iteration() const { return iteration_; }
  const std::filesystem::path& last_checkpoint() const { return last_checkpoint_; }

 private:
  void apply_learning_rates();
  std::vector<torch::Tensor> snapshot_buffers() const;
  void restore_buffers(const std::vector<torch::Tensor>& saved);

  RunConfig config_;
  std::shared_ptr<FeatureExtractor> extractor_;
  InpaintGenerator generator_{nullptr};
  Discriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::Adam> g_optimizer_;
  std::unique_ptr<torch::optim::Adam> d_optimizer_;
  int64_t iteration_ = 0;
  mutable std::filesystem::path last_checkpoint_;
};

// Reads the run config and generator weights out of a checkpoint.
InpaintGenerator load_generator(const TensorArchive& archive, RunConfig* config_out = nullptr);

// PSNR/SSIM of composites against ground truth, grouped by coarse bucket.
MetricTable evaluate(InpaintGenerator& generator, std::span<const Sample> data);
// Same table for externally produced predictions (one (3,H,W) per sample).
MetricTable evaluate_predictions(std::span<const torch::Tensor> predictions,
                                 std::span<const Sample> data, bool composite_known = true);

// Mean |I_out - I_gt| over hole pixels of a batch.
double hole_l1(const torch::Tensor& output, const torch::Tensor& target,
               const torch::Tensor& mask);

}  // namespace twinfill

#endif  // TWINFILL_TRAINER_HPP_
