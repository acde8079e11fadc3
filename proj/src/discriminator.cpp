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

#include "twinfill/discriminator.hpp"

#include <cmath>

#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace F = torch::nn::functional;

namespace {

constexpr double kNormEps = 1e-12;

torch::Tensor unit(const torch::Tensor& x) { return x / x.norm().clamp_min(kNormEps); }

torch::Tensor leaky(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(kDiscriminatorSlope));
}

}  // namespace

void DiscriminatorConfig::validate() const {
  if (base_channels < 1 || head_channels < 2) {
    throw InvalidConfig("disc.base_channels must be >= 1 and disc.head_channels >= 2");
  }
}

torch::Tensor spectral_sigma(const torch::Tensor& weight, torch::Tensor& u, torch::Tensor& v,
                             int iterations) {
  const auto matrix = weight.reshape({weight.size(0), -1});
  {
    torch::NoGradGuard no_grad;
    const auto w = matrix.detach();
    for (int i = 0; i < iterations; ++i) {
      v.copy_(unit(torch::mv(w.t(), u)));
      u.copy_(unit(torch::mv(w, v)));
    }
  }
  // Clones keep earlier graphs valid after the next in-place update.
  return torch::dot(u.clone(), torch::mv(matrix, v.clone()));
}

torch::Tensor spectral_normalize(const torch::Tensor& weight, torch::Tensor& u,
                                 torch::Tensor& v, int iterations) {
  return weight / spectral_sigma(weight, u, v, iterations);
}

SpectralConv2dImpl::SpectralConv2dImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride,
                                       int64_t padding)
    : stride_(stride), padding_(padding) {
  weight = register_parameter("weight", torch::empty({out, in, kernel, kernel}));
  torch::nn::init::kaiming_uniform_(weight, std::sqrt(5.0));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel));
  bias = register_parameter("bias", torch::empty({out}).uniform_(-bound, bound));
  u = register_buffer("u", unit(torch::randn({out})));
  v = register_buffer("v", torch::zeros({in * kernel * kernel}));
  torch::NoGradGuard no_grad;
  spectral_sigma(weight, u, v, 1);
}

torch::Tensor SpectralConv2dImpl::normalized_weight() {
  return weight / spectral_sigma(weight, u, v, is_training() ? 1 : 0);
}

torch::Tensor SpectralConv2dImpl::forward(const torch::Tensor& x) {
  return F::conv2d(x, normalized_weight(),
                   F::Conv2dFuncOptions().bias(bias).stride(stride_).padding(padding_));
}

MarkovBranchImpl::MarkovBranchImpl(int64_t in_channels, int64_t base) {
  layers = register_module("layers", torch::nn::ModuleList());
  const int64_t widths[] = {base, 2 * base, 4 * base, 4 * base, 1};
  const int64_t strides[] = {2, 2, 2, 1, 1};
  int64_t in = in_channels;
  for (int i = 0; i < 5; ++i) {
    layers->push_back(SpectralConv2d(in, widths[i], 4, strides[i], 1));
    in = widths[i];
  }
}

torch::Tensor MarkovBranchImpl::forward(const torch::Tensor& x) {
  auto h = x;
  const std::size_t last = layers->size() - 1;
  for (std::size_t i = 0; i < layers->size(); ++i) {
    h = layers[i]->as<SpectralConv2d>()->forward(h);
    h = i == last ? torch::sigmoid(h) : leaky(h);
  }
  return h;
}

EdgeHeadImpl::EdgeHeadImpl(int64_t channels) : channels_(channels) {
  conv1 = register_module("conv1", SpectralConv2d(2, channels, 3, 1, 1));
  conv2 = register_module("conv2", SpectralConv2d(channels, channels, 3, 1, 1));
  project = register_module("project", SpectralConv2d(channels, channels, 1, 1, 0));
}

torch::Tensor EdgeHeadImpl::forward(const torch::Tensor& edge_and_gray) {
  auto shortcut = F::pad(edge_and_gray,
                         F::PadFuncOptions({0, 0, 0, 0, 0, channels_ - edge_and_gray.size(1)}));
  auto residual = leaky(conv2->forward(leaky(conv1->forward(edge_and_gray))) + shortcut);
  return leaky(project->forward(residual));
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig config) : config_(config) {
  config_.validate();
  texture_branch = register_module("texture_branch", MarkovBranch(3, config_.base_channels));
  edge_head = register_module("edge_head", EdgeHead(config_.head_channels));
  structure_branch = register_module("structure_branch",
                                     MarkovBranch(config_.head_channels, config_.base_channels));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& image, const torch::Tensor& edge,
                                         const torch::Tensor& gray) {
  if (image.dim() != 4 || image.size(1) != 3 || edge.size(1) != 1 || gray.size(1) != 1 ||
      image.size(2) != edge.size(2) || image.size(3) != edge.size(3) ||
      gray.sizes() != edge.sizes()) {
    throw InvalidInput("discriminator: expected (B,3,H,W) image and matching (B,1,H,W) edge/gray");
  }
  auto texture = texture_branch->forward(image);
  auto structure = structure_branch->forward(edge_head->forward(torch::cat({edge, gray}, 1)));
  return torch::cat({texture, structure}, 1);
}

std::vector<SpectralConv2d> DiscriminatorImpl::spectral_layers() const {
  std::vector<SpectralConv2d> out;
  for (const auto& m : modules(/*include_self=*/false)) {
    if (auto sn = std::dynamic_pointer_cast<SpectralConv2dImpl>(m)) out.emplace_back(sn);
  }
  return out;
}

}  // namespace twinfill
