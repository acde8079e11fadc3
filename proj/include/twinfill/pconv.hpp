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

#ifndef TWINFILL_PCONV_HPP_
#define TWINFILL_PCONV_HPP_

#include <torch/nn/module.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

namespace twinfill {

struct PartialConvSpec {
  int64_t in_channels = 1;
  int64_t out_channels = 1;
  int64_t kernel = 3;
  int64_t stride = 1;
  int64_t padding = 1;
  int64_t dilation = 1;
  bool has_bias = true;

  void validate() const;
  int64_t output_size(int64_t input) const {
    return (input + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
  }
};

struct MaskedFeatures {
  torch::Tensor features;  // (B,C,H,W)
  torch::Tensor mask;      // (B,1,H,W), binary, never requires grad
};

// Partial convolution with mask update.
//
// For every output window with known mass S = sum(m) > 0:
//   y = W^T (x * m) * (|window| / S) + b,   m' = 1
// and y = 0, m' = 0 otherwise. The 1-channel mask broadcasts over the input
// channels, so |window| and S both carry the factor C_in and it cancels.
// |window| counts only taps that land inside the image: zero padding is
// outside the image, not a hole, and with an all-ones mask the layer is
// exactly a zero-padded vanilla convolution.
//
// The ratio and m' are computed without gradient.
MaskedFeatures partial_conv(const torch::Tensor& x, const torch::Tensor& m,
                            const torch::Tensor& weight, const torch::Tensor& bias,
                            const PartialConvSpec& spec);

class PartialConv2dImpl : public torch::nn::Module {
 public:
  explicit PartialConv2dImpl(const PartialConvSpec& spec);

  MaskedFeatures forward(const torch::Tensor& x, const torch::Tensor& m);
  const PartialConvSpec& spec() const { return spec_; }

  torch::Tensor weight;
  torch::Tensor bias;  // undefined when !has_bias

 private:
  PartialConvSpec spec_;
};
TORCH_MODULE(PartialConv2d);

// Fraction of known pixels.
double mask_coverage(const torch::Tensor& m);

}  // namespace twinfill

#endif  // TWINFILL_PCONV_HPP_
