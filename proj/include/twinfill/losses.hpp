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

#ifndef TWINFILL_LOSSES_HPP_
#define TWINFILL_LOSSES_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <torch/types.h>

#include "twinfill/discriminator.hpp"
#include "twinfill/generator.hpp"

namespace twinfill {

struct LossWeights {
  double rec = 10.0;
  double perc = 0.1;
  double style = 250.0;
  double adv = 0.1;
  double inter = 1.0;

  void validate() const;
};

// Frozen multi-stage network exposing activations at three pooling depths.
// Implementations must be deterministic and never accumulate gradients in
// their own weights.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<torch::Tensor> features(const torch::Tensor& images) const = 0;
  virtual std::vector<torch::Tensor> weights() const = 0;
};

// Seeded, randomly initialized conv3+ReLU+maxpool stack. Weights are stored
// in double and cast to the input dtype on use. Pooling rounds up, so inputs
// as small as 4x4 still yield three non-empty stages.
class RandomFeatureExtractor final : public FeatureExtractor {
 public:
  explicit RandomFeatureExtractor(std::uint64_t seed = 2021,
                                  std::array<int64_t, 3> widths = {16, 32, 64});

  std::vector<torch::Tensor> features(const torch::Tensor& images) const override;
  std::vector<torch::Tensor> weights() const override;

 private:
  std::vector<torch::Tensor> conv_weights_;
  std::vector<torch::Tensor> conv_biases_;
};

// VGG-16 up to pool3 from a named-tensor archive holding conv{1_1..3_3}.weight
// and .bias. Inputs in [0,1] are normalized with the ImageNet statistics.
class Vgg16FeatureExtractor final : public FeatureExtractor {
 public:
  explicit Vgg16FeatureExtractor(const std::filesystem::path& archive_path);

  std::vector<torch::Tensor> features(const torch::Tensor& images) const override;
  std::vector<torch::Tensor> weights() const override;

  static const std::vector<std::vector<const char*>>& layer_names();

 private:
  std::vector<std::vector<std::pair<torch::Tensor, torch::Tensor>>> stages_;
};

std::shared_ptr<FeatureExtractor> make_feature_extractor(const std::filesystem::path& vgg_weights,
                                                         std::uint64_t seed);

torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& target);

// (B,C,H,W) -> (B,C,C) Gram matrices divided by C*H*W.
torch::Tensor gram_matrix(const torch::Tensor& features);

torch::Tensor perceptual_loss(const torch::Tensor& output, const torch::Tensor& target,
                              const FeatureExtractor& extractor);
torch::Tensor style_loss(const torch::Tensor& output, const torch::Tensor& target,
                         const FeatureExtractor& extractor);

inline constexpr double kLogClamp = 1e-8;

// -mean(log D(real)) - mean(log(1 - D(fake))).
torch::Tensor discriminator_loss(const torch::Tensor& real_scores,
                                 const torch::Tensor& fake_scores);
// Non-saturating: -mean(log D(fake)).
torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_scores);

struct DiscriminatorInputs {
  torch::Tensor image;
  torch::Tensor edge;
  torch::Tensor gray;
};

struct AdversarialLosses {
  torch::Tensor discriminator;  // fake detached
  torch::Tensor generator;
};

AdversarialLosses adversarial_losses(Discriminator& discriminator,
                                     const DiscriminatorInputs& real,
                                     const DiscriminatorInputs& fake);

// BCE(edge_gt, sigmoid(edge_logits)) + L1(image_gt, rgb_preview).
torch::Tensor intermediate_loss(const HeadOutputs& heads, const torch::Tensor& edge_gt,
                                const torch::Tensor& image_gt);
torch::Tensor intermediate_loss(InpaintGenerator& generator,
                                const torch::Tensor& structure_features,
                                const torch::Tensor& texture_features, const Batch& batch);

struct LossTerms {
  torch::Tensor rec;
  torch::Tensor perc;
  torch::Tensor style;
  torch::Tensor adv;  // generator side
  torch::Tensor inter;
};

torch::Tensor joint_loss(const LossTerms& terms, const LossWeights& weights);
double joint_loss(const std::array<double, 5>& terms, const LossWeights& weights);

}  // namespace twinfill

#endif  // TWINFILL_LOSSES_HPP_
