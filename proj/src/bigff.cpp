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

#include "twinfill/bigff.hpp"

#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace F = torch::nn::functional;

GatedFusion gated_fusion(const torch::Tensor& texture, const torch::Tensor& structure,
                         const torch::Tensor& g_weight, const torch::Tensor& g_bias,
                         const torch::Tensor& h_weight, const torch::Tensor& h_bias,
                         const torch::Tensor& alpha, const torch::Tensor& beta) {
  if (texture.sizes() != structure.sizes() || texture.dim() != 4) {
    throw InvalidInput("bigff: texture and structure features must share a (B,C,H,W) shape");
  }
  const auto both = torch::cat({texture, structure}, 1);
  GatedFusion out;
  out.texture_gate =
      torch::sigmoid(F::conv2d(both, g_weight, F::Conv2dFuncOptions().padding(1).bias(g_bias)));
  out.structure_gate =
      torch::sigmoid(F::conv2d(both, h_weight, F::Conv2dFuncOptions().padding(1).bias(h_bias)));
  auto structure_refined = alpha * (out.texture_gate * texture) + structure;
  auto texture_refined = beta * (out.structure_gate * structure) + texture;
  out.fused = torch::cat({structure_refined, texture_refined}, 1);
  return out;
}

BiGFFImpl::BiGFFImpl(int64_t channels) : channels_(channels) {
  if (channels < 1) throw InvalidConfig("bigff: channels must be >= 1");
  auto gate = [&] {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * channels, channels, 3).padding(1));
  };
  texture_gate = register_module("texture_gate", gate());
  structure_gate = register_module("structure_gate", gate());
  alpha = register_parameter("alpha", torch::zeros({}));
  beta = register_parameter("beta", torch::zeros({}));
}

GatedFusion BiGFFImpl::fuse(const torch::Tensor& texture, const torch::Tensor& structure) {
  if (texture.size(1) != channels_) throw InvalidInput("bigff: channel mismatch");
  return gated_fusion(texture, structure, texture_gate->weight, texture_gate->bias,
                      structure_gate->weight, structure_gate->bias, alpha, beta);
}

torch::Tensor BiGFFImpl::forward(const torch::Tensor& texture, const torch::Tensor& structure) {
  return fuse(texture, structure).fused;
}

}  // namespace twinfill
