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

#ifndef TWINFILL_GENERATOR_HPP_
#define TWINFILL_GENERATOR_HPP_

#include <vector>

#include <torch/nn/module.h>
#include <torch/nn/modules/batchnorm.h>
#include <torch/nn/modules/container/modulelist.h>
#include <torch/nn/modules/conv.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

#include "twinfill/bigff.hpp"
#include "twinfill/cfa.hpp"
#include "twinfill/datapipe.hpp"
#include "twinfill/pconv.hpp"

namespace twinfill {

struct GeneratorConfig {
  int64_t image_size = 256;
  int64_t levels = 7;
  int64_t base_channels = 64;
  int64_t max_channels = 512;
  int64_t feature_channels = 64;  // width of F_t and F_s
  bool two_stream = true;         // false: one widened encoder-decoder
  bool cross_borrow = true;       // decoders take the other stream's skips
  bool use_bigff = true;
  bool use_cfa = true;
  bool multiscale_cfa = true;
  bool batch_norm = true;
  // Multiplier on every backbone width. 0 picks 1 for two streams and the
  // parameter-matched widening for the single-stream variant.
  double width_scale = 0.0;

  // levels = min(7, log2(size) - 1): 7 at 256, 5 at 64, 4 at 32.
  static GeneratorConfig for_size(int64_t size);

  void validate() const;
  double resolved_width_scale() const;
  int64_t encoder_channels(int64_t level) const;
  static int64_t encoder_kernel(int64_t level);
};

// Exact trainable-parameter count of the generator built from `config`.
int64_t count_parameters(const GeneratorConfig& config);

// Width multiplier that brings the single-stream variant of `config` closest
// to the two-stream parameter count.
double matched_single_stream_scale(const GeneratorConfig& config);

struct GeneratorInputs {
  torch::Tensor image_in;  // (B,3,H,W)
  torch::Tensor edge_in;   // (B,1,H,W)
  torch::Tensor gray_in;   // (B,1,H,W)
  torch::Tensor mask;      // (B,1,H,W)

  static GeneratorInputs from(const Batch& batch);
  static GeneratorInputs from(const Sample& sample);  // adds a batch dim
};

struct StreamFeatures {
  std::vector<torch::Tensor> texture_skips;    // encoder output per level
  std::vector<torch::Tensor> structure_skips;
  std::vector<torch::Tensor> masks_per_level;  // texture encoder masks
  std::vector<torch::Tensor> structure_masks;
  std::vector<torch::Tensor> decoder_masks;    // texture decoder, deepest first
  torch::Tensor texture_input, structure_input, input_mask;
  torch::Tensor texture_features;    // F_t
  torch::Tensor structure_features;  // F_s
};

struct HeadOutputs {
  torch::Tensor rgb_preview;  // P_t(F_t) through a sigmoid, (B,3,H,W)
  torch::Tensor edge_logits;  // P_s(F_s), raw, (B,1,H,W)
};

struct GeneratorOutput {
  torch::Tensor image;  // I_out in [0,1]
  torch::Tensor edge;   // E_out = sigmoid(edge_logits)
  HeadOutputs heads;
  torch::Tensor fused;  // F_b
  StreamFeatures features;
};

class EncoderStageImpl : public torch::nn::Module {
 public:
  EncoderStageImpl(int64_t in, int64_t out, int64_t kernel, bool norm);
  MaskedFeatures forward(const torch::Tensor& x, const torch::Tensor& m);

  PartialConv2d conv{nullptr};
  torch::nn::BatchNorm2d norm{nullptr};
};
TORCH_MODULE(EncoderStage);

class DecoderStageImpl : public torch::nn::Module {
 public:
  DecoderStageImpl(int64_t in, int64_t out, bool norm);
  MaskedFeatures forward(const torch::Tensor& x, const torch::Tensor& m);

  PartialConv2d conv{nullptr};
  torch::nn::BatchNorm2d norm{nullptr};
};
TORCH_MODULE(DecoderStage);

// x + conv(relu(conv(x))), then a 1x1 projection.
class ProjectionHeadImpl : public torch::nn::Module {
 public:
  ProjectionHeadImpl(int64_t channels, int64_t out_channels);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d res1{nullptr};
  torch::nn::Conv2d res2{nullptr};
  torch::nn::Conv2d project{nullptr};
};
TORCH_MODULE(ProjectionHead);

class InpaintGeneratorImpl : public torch::nn::Module {
 public:
  explicit InpaintGeneratorImpl(GeneratorConfig config);

  StreamFeatures encode(const GeneratorInputs& inputs);
  void decode(StreamFeatures& features);
  HeadOutputs project_heads(const torch::Tensor& texture, const torch::Tensor& structure);
  GeneratorOutput forward(const GeneratorInputs& inputs);

  // Finetune phase: batch-norm layers use running statistics and their affine
  // parameters stop receiving gradients. Survives later train() calls.
  void freeze_batch_norm(bool frozen = true);
  bool batch_norm_frozen() const { return bn_frozen_; }
  std::vector<torch::nn::BatchNorm2d> batch_norms() const;
  void train(bool on = true) override;

  const GeneratorConfig& config() const { return config_; }

  torch::nn::ModuleList texture_encoder{nullptr};
  torch::nn::ModuleList structure_encoder{nullptr};  // empty when single-stream
  torch::nn::ModuleList texture_decoder{nullptr};
  torch::nn::ModuleList structure_decoder{nullptr};  // empty when single-stream
  ProjectionHead texture_head{nullptr};
  ProjectionHead structure_head{nullptr};
  BiGFF fusion{nullptr};
  ContextualAggregation aggregation{nullptr};
  torch::nn::Conv2d output_hidden{nullptr};
  torch::nn::Conv2d output_rgb{nullptr};

 private:
  GeneratorConfig config_;
  bool bn_frozen_ = false;
};
TORCH_MODULE(InpaintGenerator);

// I_comp = image_in + (1 - M) * I_out: known pixels pass through untouched.
torch::Tensor composite(const torch::Tensor& output, const torch::Tensor& image_in,
                        const torch::Tensor& mask);
torch::Tensor composite(const torch::Tensor& output, const Sample& sample);

struct Generated {
  torch::Tensor image;  // (3,H,W)
  torch::Tensor edge;   // (1,H,W)
};

// Eval-mode, no-grad forward of a single sample.
Generated generate(InpaintGenerator& generator, const Sample& sample);

}  // namespace twinfill

#endif  // TWINFILL_GENERATOR_HPP_
