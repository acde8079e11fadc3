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

#ifndef TWINFILL_CFA_HPP_
#define TWINFILL_CFA_HPP_

#include <array>

#include <torch/nn/module.h>
#include <torch/nn/modules/container/modulelist.h>
#include <torch/nn/modules/conv.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

namespace twinfill {

inline constexpr std::array<int64_t, 4> kAggregationDilations = {1, 2, 4, 8};
inline constexpr double kCosineEps = 1e-8;

// 3x3 patches around every pixel of a (B,C,H,W) map with replicate padding,
// as (B, C*9, N) columns, N = H*W. Layout per column is (c, dy, dx).
torch::Tensor feature_patches(const torch::Tensor& feature);

// Cosine similarity between every pair of patches, (B,N,N). Patch norms are
// clamped below at eps so flat zero patches stay finite.
torch::Tensor patch_cosine_similarity(const torch::Tensor& feature, double eps = kCosineEps);

// Row-wise softmax of the cosine similarities: row i is the attention patch i
// pays to every patch j, and sums to 1.
torch::Tensor attention_scores(const torch::Tensor& feature, double eps = kCosineEps);

// f~_i = sum_j f_j * S[i,j], pasted back by overlap-add and divided by the
// number of patches covering each pixel. Identity scores give back F exactly.
torch::Tensor reconstruct(const torch::Tensor& feature, const torch::Tensor& scores);

// Contextual feature aggregation block.
//
//   F_in -> stride-2 conv -> attention + reconstruct -> multi-scale
//   aggregation -> stride-2 deconv -> concat with F_in -> 1x1 conv
//
// The aggregation runs four 3x3 convs with dilation 1, 2, 4, 8 over F_rec and
// blends them with a per-pixel softmax weight map predicted by a small
// conv-relu-conv-relu head. With multiscale off the block is the fixed-scale
// contextual-attention baseline and F_rec is used directly.
class ContextualAggregationImpl : public torch::nn::Module {
 public:
  ContextualAggregationImpl(int64_t channels, bool multiscale);

  torch::Tensor forward(const torch::Tensor& input);

  // (B,4,H,W) simplex weights, one channel per dilation.
  torch::Tensor weight_maps(const torch::Tensor& reconstructed);
  torch::Tensor aggregate(const torch::Tensor& reconstructed);

  int64_t channels() const { return channels_; }
  bool multiscale() const { return multiscale_; }

  torch::nn::Conv2d down{nullptr};
  torch::nn::ModuleList branches{nullptr};
  torch::nn::Conv2d weight_hidden{nullptr};
  torch::nn::Conv2d weight_out{nullptr};
  torch::nn::ConvTranspose2d up{nullptr};
  torch::nn::Conv2d merge{nullptr};

 private:
  int64_t channels_;
  bool multiscale_;
};
TORCH_MODULE(ContextualAggregation);

}  // namespace twinfill

#endif  // TWINFILL_CFA_HPP_
