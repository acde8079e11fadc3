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

#include "twinfill/cfa.hpp"

#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace F = torch::nn::functional;

namespace {

void require_map(const torch::Tensor& t) {
  if (t.dim() != 4) throw InvalidInput("cfa: expected a (B,C,H,W) feature map");
}

}  // namespace

torch::Tensor feature_patches(const torch::Tensor& feature) {
  require_map(feature);
  auto padded = F::pad(feature, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReplicate));
  return F::unfold(padded, F::UnfoldFuncOptions({3, 3}));
}

torch::Tensor patch_cosine_similarity(const torch::Tensor& feature, double eps) {
  auto patches = feature_patches(feature);
  auto norms = patches.norm(2, /*dim=*/1, /*keepdim=*/true).clamp_min(eps);
  auto unit = patches / norms;
  return torch::bmm(unit.transpose(1, 2), unit);
}

torch::Tensor attention_scores(const torch::Tensor& feature, double eps) {
  return torch::softmax(patch_cosine_similarity(feature, eps), /*dim=*/2);
}

torch::Tensor reconstruct(const torch::Tensor& feature, const torch::Tensor& scores) {
  require_map(feature);
  const int64_t height = feature.size(2);
  const int64_t width = feature.size(3);
  const int64_t n = height * width;
  if (scores.dim() != 3 || scores.size(1) != n || scores.size(2) != n) {
    throw InvalidInput("cfa: score matrix must be (B,N,N) with N = H*W");
  }
  auto patches = feature_patches(feature);
  auto rebuilt = torch::bmm(patches, scores.transpose(1, 2));
  const auto fold = F::FoldFuncOptions({height, width}, {3, 3}).padding(1);
  auto summed = F::fold(rebuilt, fold);
  auto coverage =
      F::fold(torch::ones({1, 9, n}, feature.options().requires_grad(false)), fold);
  return summed / coverage;
}

ContextualAggregationImpl::ContextualAggregationImpl(int64_t channels, bool multiscale)
    : channels_(channels), multiscale_(multiscale) {
  if (channels < 1) throw InvalidConfig("cfa: channels must be >= 1");
  using torch::nn::Conv2dOptions;
  down = register_module("down",
                         torch::nn::Conv2d(Conv2dOptions(channels, channels, 3).stride(2).padding(1)));
  branches = register_module("branches", torch::nn::ModuleList());
  if (multiscale) {
    for (int64_t d : kAggregationDilations) {
      branches->push_back(
          torch::nn::Conv2d(Conv2dOptions(channels, channels, 3).dilation(d).padding(d)));
    }
    weight_hidden = register_module(
        "weight_hidden", torch::nn::Conv2d(Conv2dOptions(channels, channels, 3).padding(1)));
    weight_out = register_module(
        "weight_out",
        torch::nn::Conv2d(Conv2dOptions(channels, kAggregationDilations.size(), 1)));
  }
  up = register_module("up", torch::nn::ConvTranspose2d(
                                 torch::nn::ConvTranspose2dOptions(channels, channels, 4)
                                     .stride(2)
                                     .padding(1)));
  merge = register_module("merge",
                          torch::nn::Conv2d(Conv2dOptions(2 * channels, channels, 1)));
}

torch::Tensor ContextualAggregationImpl::weight_maps(const torch::Tensor& reconstructed) {
  if (!multiscale_) throw InvalidInput("cfa: fixed-scale block has no weight maps");
  auto hidden = torch::relu(weight_hidden->forward(reconstructed));
  return torch::softmax(torch::relu(weight_out->forward(hidden)), /*dim=*/1);
}

torch::Tensor ContextualAggregationImpl::aggregate(const torch::Tensor& reconstructed) {
  require_map(reconstructed);
  auto weights = weight_maps(reconstructed);
  torch::Tensor out;
  for (std::size_t k = 0; k < branches->size(); ++k) {
    auto term = branches[k]->as<torch::nn::Conv2d>()->forward(reconstructed) *
                weights.narrow(1, static_cast<int64_t>(k), 1);
    out = out.defined() ? out + term : term;
  }
  return out;
}

torch::Tensor ContextualAggregationImpl::forward(const torch::Tensor& input) {
  require_map(input);
  if (input.size(1) != channels_) throw InvalidInput("cfa: channel mismatch");
  const int64_t height = input.size(2);
  const int64_t width = input.size(3);
  // Odd sizes are padded up to even and cropped back after the deconv.
  const int64_t pad_h = height % 2;
  const int64_t pad_w = width % 2;
  auto x = input;
  if (pad_h || pad_w) {
    x = F::pad(input, F::PadFuncOptions({0, pad_w, 0, pad_h}).mode(torch::kReplicate));
  }
  auto low = F::leaky_relu(down->forward(x), F::LeakyReLUFuncOptions().negative_slope(0.2));
  auto rebuilt = reconstruct(low, attention_scores(low));
  auto refined = multiscale_ ? aggregate(rebuilt) : rebuilt;
  auto lifted = F::leaky_relu(up->forward(refined), F::LeakyReLUFuncOptions().negative_slope(0.2));
  if (pad_h || pad_w) lifted = lifted.narrow(2, 0, height).narrow(3, 0, width);
  return merge->forward(torch::cat({input, lifted}, 1));
}

}  // namespace twinfill
