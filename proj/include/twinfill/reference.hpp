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

#ifndef TWINFILL_REFERENCE_HPP_
#define TWINFILL_REFERENCE_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include <torch/types.h>

// Straightforward serial implementations, written for readability rather
// than speed. They are the oracles for the parallel kernels and the tensor
// paths, and the baseline in the benchmark.
namespace twinfill::reference {

// Direct 2-D gaussian, angle-binned non-max suppression and breadth-first
// hysteresis.
std::vector<std::uint8_t> canny(const std::vector<double>& gray, int height, int width,
                                double sigma, double low, double high);

double mse(const std::vector<double>& a, const std::vector<double>& b);

// Per-window SSIM with two-pass moments.
double ssim(const std::vector<double>& a, const std::vector<double>& b, int height,
            int width);

// Sliding-window partial convolution. x (B,C,H,W), m (B,1,H,W), weight
// (O,C,k,k), bias (O) or undefined. Returns (features, updated mask), double.
std::pair<torch::Tensor, torch::Tensor> partial_conv(const torch::Tensor& x,
                                                     const torch::Tensor& m,
                                                     const torch::Tensor& weight,
                                                     const torch::Tensor& bias, int stride,
                                                     int padding, int dilation);

// 3x3 replicate-padded patches of a (C,H,W) map; row i holds patch i
// flattened as (c, dy, dx).
torch::Tensor extract_patches(const torch::Tensor& feature);

// Row-softmax of cosine similarities between all patch pairs, (N,N).
torch::Tensor attention_scores(const torch::Tensor& feature, double eps);

// Overlap-add reconstruction from attention-weighted patches, normalized by
// the number of patches covering each pixel. Returns (C,H,W).
torch::Tensor reconstruct(const torch::Tensor& feature, const torch::Tensor& scores);

}  // namespace twinfill::reference

#endif  // TWINFILL_REFERENCE_HPP_
