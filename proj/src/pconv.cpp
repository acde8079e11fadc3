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

#include "twinfill/pconv.hpp"

#include <cmath>

#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace F = torch::nn::functional;

void PartialConvSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) throw InvalidConfig("pconv: channels must be >= 1");
  if (kernel < 1) throw InvalidConfig("pconv: kernel must be >= 1");
  if (stride < 1 || dilation < 1 || padding < 0) {
    throw InvalidConfig("pconv: invalid stride/dilation/padding");
  }
}

MaskedFeatures partial_conv(const torch::Tensor& x, const torch::Tensor& m,
                            const torch::Tensor& weight, const torch::Tensor& bias,
                            const PartialConvSpec& spec) {
  if (x.dim() != 4 || m.dim() != 4) throw InvalidInput("pconv: expected 4-d tensors");
  if (x.size(1) != spec.in_channels || weight.size(1) != spec.in_channels) {
    throw InvalidInput("pconv: channel mismatch (got " + std::to_string(x.size(1)) +
                       ", expected " + std::to_string(spec.in_channels) + ")");
  }
  if (m.size(1) != 1 || m.size(0) != x.size(0) || m.size(2) != x.size(2) ||
      m.size(3) != x.size(3)) {
    throw InvalidInput("pconv: mask must be (B,1,H,W) matching the input");
  }
  const auto opts = F::Conv2dFuncOptions()
                        .stride(spec.stride)
                        .padding(spec.padding)
                        .dilation(spec.dilation);

  torch::Tensor ratio;
  torch::Tensor new_mask;
  {
    torch::NoGradGuard no_grad;
    const auto mask = m.detach().to(x.scalar_type());
    auto taps = torch::ones({1, 1, spec.kernel, spec.kernel}, mask.options());
    auto known = F::conv2d(mask, taps, opts);
    auto inside = F::conv2d(torch::ones({1, 1, m.size(2), m.size(3)}, mask.options()),
                            taps, opts);
    new_mask = (known > 0.5).to(mask.scalar_type());
    ratio = inside / known.clamp_min(1.0) * new_mask;
  }

  auto raw = F::conv2d(x * m.detach().to(x.scalar_type()), weight, opts);
  auto y = raw * ratio;
  if (bias.defined()) y = y + bias.view({1, -1, 1, 1}) * new_mask;
  return {y, new_mask};
}

PartialConv2dImpl::PartialConv2dImpl(const PartialConvSpec& spec) : spec_(spec) {
  spec_.validate();
  weight = register_parameter(
      "weight", torch::empty({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}));
  torch::nn::init::kaiming_uniform_(weight, std::sqrt(5.0));
  if (spec.has_bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in_channels * spec.kernel *
                                                             spec.kernel));
    bias = register_parameter("bias", torch::empty({spec.out_channels}).uniform_(-bound, bound));
  }
}

MaskedFeatures PartialConv2dImpl::forward(const torch::Tensor& x, const torch::Tensor& m) {
  return partial_conv(x, m, weight, bias, spec_);
}

double mask_coverage(const torch::Tensor& m) {
  if (m.numel() == 0) throw InvalidInput("mask_coverage of an empty mask");
  return m.to(torch::kFloat64).mean().item<double>();
}

}  // namespace twinfill
