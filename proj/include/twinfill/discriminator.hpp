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

#ifndef TWINFILL_DISCRIMINATOR_HPP_
#define TWINFILL_DISCRIMINATOR_HPP_

#include <torch/nn/module.h>
#include <torch/nn/modules/container/modulelist.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

namespace twinfill {

inline constexpr double kDiscriminatorSlope = 0.2;

struct DiscriminatorConfig {
  int64_t base_channels = 64;  // branch widths base, 2x, 4x, 4x, 1
  int64_t head_channels = 64;  // edge-detector head width

  void validate() const;
};

// Largest singular value of `weight` viewed as (rows, -1), by power
// iteration. `u` (rows) and `v` (cols) are unit vectors updated in place
// without gradient; the returned sigma = u^T W v is differentiable in W.
torch::Tensor spectral_sigma(const torch::Tensor& weight, torch::Tensor& u, torch::Tensor& v,
                             int iterations);

// weight / spectral_sigma(weight, u, v, iterations).
torch::Tensor spectral_normalize(const torch::Tensor& weight, torch::Tensor& u,
                                 torch::Tensor& v, int iterations = 1);

// Conv2d whose weight is divided by its spectral norm on every forward. One
// power-iteration step runs per training-mode forward; u and v are buffers
// so they round-trip through checkpoints.
class SpectralConv2dImpl : public torch::nn::Module {
 public:
  SpectralConv2dImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding);

  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor normalized_weight();

  torch::Tensor weight;
  torch::Tensor bias;
  torch::Tensor u;
  torch::Tensor v;

 private:
  int64_t stride_;
  int64_t padding_;
};
TORCH_MODULE(SpectralConv2d);

// Three 4x4 stride-2 convs, two 4x4 stride-1 convs, padding 1, leaky ReLU
// between layers and a sigmoid at the end. 64x64 input -> 6x6 score map.
class MarkovBranchImpl : public torch::nn::Module {
 public:
  MarkovBranchImpl(int64_t in_channels, int64_t base_channels);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::ModuleList layers{nullptr};
};
TORCH_MODULE(MarkovBranch);

// Residual block over concat(edge, gray) followed by a 1x1 conv. The
// shortcut is the identity with zero-padded extra channels.
class EdgeHeadImpl : public torch::nn::Module {
 public:
  explicit EdgeHeadImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& edge_and_gray);

  SpectralConv2d conv1{nullptr};
  SpectralConv2d conv2{nullptr};
  SpectralConv2d project{nullptr};

 private:
  int64_t channels_;
};
TORCH_MODULE(EdgeHead);

class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorConfig config = {});

  // (B,2,h,w) scores in (0,1): channel 0 texture, channel 1 structure.
  torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& edge,
                        const torch::Tensor& gray);

  std::vector<SpectralConv2d> spectral_layers() const;
  const DiscriminatorConfig& config() const { return config_; }

  MarkovBranch texture_branch{nullptr};
  EdgeHead edge_head{nullptr};
  MarkovBranch structure_branch{nullptr};

 private:
  DiscriminatorConfig config_;
};
TORCH_MODULE(Discriminator);

}  // namespace twinfill

#endif  // TWINFILL_DISCRIMINATOR_HPP_
