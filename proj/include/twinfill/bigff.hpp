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

#ifndef TWINFILL_BIGFF_HPP_
#define TWINFILL_BIGFF_HPP_

#include <torch/nn/module.h>
#include <torch/nn/modules/conv.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

namespace twinfill {

struct GatedFusion {
  torch::Tensor fused;            // F_b = concat(F_s', F_t'), (B,2C,H,W)
  torch::Tensor texture_gate;     // G_t, gates texture into structure
  torch::Tensor structure_gate;   // G_s, gates structure into texture
};

// Bi-directional gated feature fusion:
//   G_t = sigmoid(g([F_t, F_s])),  F_s' = alpha * (G_t * F_t) + F_s
//   G_s = sigmoid(h([F_t, F_s])),  F_t' = beta  * (G_s * F_s) + F_t
//   F_b = [F_s', F_t']
// g, h are 3x3 convolutions 2C -> C; alpha, beta are scalars.
GatedFusion gated_fusion(const torch::Tensor& texture, const torch::Tensor& structure,
                         const torch::Tensor& g_weight, const torch::Tensor& g_bias,
                         const torch::Tensor& h_weight, const torch::Tensor& h_bias,
                         const torch::Tensor& alpha, const torch::Tensor& beta);

class BiGFFImpl : public torch::nn::Module {
 public:
  explicit BiGFFImpl(int64_t channels);

  // Returns F_b.
  torch::Tensor forward(const torch::Tensor& texture, const torch::Tensor& structure);
  GatedFusion fuse(const torch::Tensor& texture, const torch::Tensor& structure);

  int64_t channels() const { return channels_; }

  torch::nn::Conv2d texture_gate{nullptr};    // g
  torch::nn::Conv2d structure_gate{nullptr};  // h
  torch::Tensor alpha;                        // starts at exactly 0
  torch::Tensor beta;                         // starts at exactly 0

 private:
  int64_t channels_;
};
TORCH_MODULE(BiGFF);

}  // namespace twinfill

#endif  // TWINFILL_BIGFF_HPP_
