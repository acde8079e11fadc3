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

#include "twinfill/losses.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <torch/torch.h>

#include "twinfill/archive.hpp"
#include "twinfill/errors.hpp"

namespace twinfill {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  for (double w : {rec, perc, style, adv, inter}) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidConfig("loss weights must be finite and >= 0");
  }
}

namespace {

// Box-Muller over mt19937_64 so the weights do not depend on libstdc++'s
// normal_distribution.
torch::Tensor seeded_normal(std::mt19937_64& rng, std::vector<int64_t> shape, double stddev) {
  auto t = torch::empty(shape, torch::kDouble);
  auto* p = t.data_ptr<double>();
  const int64_t n = t.numel();
  auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  for (int64_t i = 0; i < n; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    p[i] = r * std::cos(theta) * stddev;
    if (i + 1 < n) p[i + 1] = r * std::sin(theta) * stddev;
  }
  return t;
}

torch::Tensor cast_like(const torch::Tensor& w, const torch::Tensor& x) {
  return w.to(x.scalar_type());
}

}  // namespace

RandomFeatureExtractor::RandomFeatureExtractor(std::uint64_t seed, std::array<int64_t, 3> widths) {
  std::mt19937_64 rng(seed);
  int64_t in = 3;
  for (int64_t out : widths) {
    if (out <= 0) throw InvalidConfig("extractor widths must be positive");
    conv_weights_.push_back(seeded_normal(rng, {out, in, 3, 3}, std::sqrt(2.0 / (in * 9))));
    conv_biases_.push_back(torch::zeros({out}, torch::kDouble));
    in = out;
  }
}

std::vector<torch::Tensor> RandomFeatureExtractor::features(const torch::Tensor& images) const {
  std::vector<torch::Tensor> out;
  auto x = images;
  for (std::size_t i = 0; i < conv_weights_.size(); ++i) {
    x = torch::relu(F::conv2d(x, cast_like(conv_weights_[i], x),
                              F::Conv2dFuncOptions().bias(cast_like(conv_biases_[i], x)).padding(1)));
    x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2).stride(2).ceil_mode(true));
    out.push_back(x);
  }
  return out;
}

std::vector<torch::Tensor> RandomFeatureExtractor::weights() const {
  auto all = conv_weights_;
  all.insert(all.end(), conv_biases_.begin(), conv_biases_.end());
  return all;
}

const std::vector<std::vector<const char*>>& Vgg16FeatureExtractor::layer_names() {
  static const std::vector<std::vector<const char*>> names = {
      {"conv1_1", "conv1_2"}, {"conv2_1", "conv2_2"}, {"conv3_1", "conv3_2", "conv3_3"}};
  return names;
}

Vgg16FeatureExtractor::Vgg16FeatureExtractor(const std::filesystem::path& archive_path) {
  const auto archive = read_archive(archive_path);
  int64_t in = 3;
  const std::array<int64_t, 3> widths = {64, 128, 256};
  for (std::size_t s = 0; s < layer_names().size(); ++s) {
    std::vector<std::pair<torch::Tensor, torch::Tensor>> stage;
    for (const char* name : layer_names()[s]) {
      const auto* w = archive.find(std::string(name) + ".weight");
      const auto* b = archive.find(std::string(name) + ".bias");
      if (w == nullptr || b == nullptr) {
        throw CheckpointError(std::string("vgg16 weights missing ") + name);
      }
      if (w->sizes() != torch::IntArrayRef({widths[s], in, 3, 3}) ||
          b->sizes() != torch::IntArrayRef({widths[s]})) {
        throw CheckpointError(std::string("vgg16 weights have wrong shape for ") + name);
      }
      stage.emplace_back(w->to(torch::kDouble), b->to(torch::kDouble));
      in = widths[s];
    }
    stages_.push_back(std::move(stage));
  }
}

std::vector<torch::Tensor> Vgg16FeatureExtractor::features(const torch::Tensor& images) const {
  const auto opts = images.options();
  const auto mean = torch::tensor({0.485, 0.456, 0.406}, opts).view({1, 3, 1, 1});
  const auto stddev = torch::tensor({0.229, 0.224, 0.225}, opts).view({1, 3, 1, 1});
  auto x = (images - mean) / stddev;
  std::vector<torch::Tensor> out;
  for (const auto& stage : stages_) {
    for (const auto& [w, b] : stage) {
      x = torch::relu(
          F::conv2d(x, cast_like(w, x), F::Conv2dFuncOptions().bias(cast_like(b, x)).padding(1)));
    }
    x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2).stride(2));
    out.push_back(x);
  }
  return out;
}

std::vector<torch::Tensor> Vgg16FeatureExtractor::weights() const {
  std::vector<torch::Tensor> all;
  for (const auto& stage : stages_) {
    for (const auto& [w, b] : stage) {
      all.push_back(w);
      all.push_back(b);
    }
  }
  return all;
}

std::shared_ptr<FeatureExtractor> make_feature_extractor(const std::filesystem::path& vgg_weights,
                                                         std::uint64_t seed) {
  if (!vgg_weights.empty()) return std::make_shared<Vgg16FeatureExtractor>(vgg_weights);
  return std::make_shared<RandomFeatureExtractor>(seed);
}

torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& target) {
  if (output.sizes() != target.sizes()) throw InvalidInput("reconstruction_loss: shape mismatch");
  return (output - target).abs().mean();
}

torch::Tensor gram_matrix(const torch::Tensor& features) {
  if (features.dim() != 4) throw InvalidInput("gram_matrix expects (B,C,H,W)");
  const auto b = features.size(0);
  const auto c = features.size(1);
  const auto hw = features.size(2) * features.size(3);
  const auto flat = features.reshape({b, c, hw});
  return torch::bmm(flat, flat.transpose(1, 2)) / static_cast<double>(c * hw);
}

torch::Tensor perceptual_loss(const torch::Tensor& output, const torch::Tensor& target,
                              const FeatureExtractor& extractor) {
  const auto a = extractor.features(output);
  const auto b = extractor.features(target);
  auto total = torch::zeros({}, output.options());
  for (std::size_t i = 0; i < a.size(); ++i) total = total + (a[i] - b[i]).abs().mean();
  return total;
}

torch::Tensor style_loss(const torch::Tensor& output, const torch::Tensor& target,
                         const FeatureExtractor& extractor) {
  const auto a = extractor.features(output);
  const auto b = extractor.features(target);
  auto total = torch::zeros({}, output.options());
  for (std::size_t i = 0; i < a.size(); ++i) {
    total = total + (gram_matrix(a[i]) - gram_matrix(b[i])).abs().mean();
  }
  return total;
}

torch::Tensor discriminator_loss(const torch::Tensor& real_scores,
                                 const torch::Tensor& fake_scores) {
  return -torch::log(real_scores.clamp_min(kLogClamp)).mean() -
         torch::log((1.0 - fake_scores).clamp_min(kLogClamp)).mean();
}

torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_scores) {
  return -torch::log(fake_scores.clamp_min(kLogClamp)).mean();
}

AdversarialLosses adversarial_losses(Discriminator& discriminator,
                                     const DiscriminatorInputs& real,
                                     const DiscriminatorInputs& fake) {
  const auto real_scores = discriminator->forward(real.image, real.edge, real.gray);
  const auto fake_detached = discriminator->forward(fake.image.detach(), fake.edge.detach(),
                                                    fake.gray.detach());
  const auto fake_scores = discriminator->forward(fake.image, fake.edge, fake.gray);
  return {discriminator_loss(real_scores, fake_detached),
          generator_adversarial_loss(fake_scores)};
}

torch::Tensor intermediate_loss(const HeadOutputs& heads, const torch::Tensor& edge_gt,
                                const torch::Tensor& image_gt) {
  return F::binary_cross_entropy_with_logits(heads.edge_logits, edge_gt) +
         (heads.rgb_preview - image_gt).abs().mean();
}

torch::Tensor intermediate_loss(InpaintGenerator& generator,
                                const torch::Tensor& structure_features,
                                const torch::Tensor& texture_features, const Batch& batch) {
  return intermediate_loss(generator->project_heads(texture_features, structure_features),
                           batch.edge_gt, batch.image_gt);
}

torch::Tensor joint_loss(const LossTerms& terms, const LossWeights& weights) {
  return weights.rec * terms.rec + weights.perc * terms.perc + weights.style * terms.style +
         weights.adv * terms.adv + weights.inter * terms.inter;
}

double joint_loss(const std::array<double, 5>& terms, const LossWeights& weights) {
  return weights.rec * terms[0] + weights.perc * terms[1] + weights.style * terms[2] +
         weights.adv * terms[3] + weights.inter * terms[4];
}

}  // namespace twinfill
