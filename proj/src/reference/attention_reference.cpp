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

#include <algorithm>
#include <cmath>

#include <torch/torch.h>

#include "twinfill/reference.hpp"

namespace twinfill::reference {

torch::Tensor extract_patches(const torch::Tensor& feature) {
  const auto f = feature.detach().to(torch::kFloat64).contiguous();
  const int64_t channels = f.size(0), height = f.size(1), width = f.size(2);
  auto fa = f.accessor<double, 3>();
  auto patches = torch::zeros({height * width, channels * 9}, torch::kFloat64);
  auto pa = patches.accessor<double, 2>();
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) {
      const int64_t i = y * width + x;
      for (int64_t c = 0; c < channels; ++c) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int64_t sy = std::clamp<int64_t>(y + dy, 0, height - 1);
            const int64_t sx = std::clamp<int64_t>(x + dx, 0, width - 1);
            pa[i][c * 9 + (dy + 1) * 3 + (dx + 1)] = fa[c][sy][sx];
          }
        }
      }
    }
  }
  return patches;
}

torch::Tensor attention_scores(const torch::Tensor& feature, double eps) {
  const auto patches = extract_patches(feature);
  auto pa = patches.accessor<double, 2>();
  const int64_t n = patches.size(0), d = patches.size(1);
  std::vector<double> norms(n);
  for (int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int64_t t = 0; t < d; ++t) s += pa[i][t] * pa[i][t];
    norms[i] = std::max(std::sqrt(s), eps);
  }
  auto scores = torch::zeros({n, n}, torch::kFloat64);
  auto sa = scores.accessor<double, 2>();
  for (int64_t i = 0; i < n; ++i) {
    std::vector<double> row(n);
    double row_max = -1e300;
    for (int64_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int64_t t = 0; t < d; ++t) dot += pa[i][t] * pa[j][t];
      row[j] = dot / (norms[i] * norms[j]);
      row_max = std::max(row_max, row[j]);
    }
    double denom = 0.0;
    for (int64_t j = 0; j < n; ++j) denom += std::exp(row[j] - row_max);
    for (int64_t j = 0; j < n; ++j) sa[i][j] = std::exp(row[j] - row_max) / denom;
  }
  return scores;
}

torch::Tensor reconstruct(const torch::Tensor& feature, const torch::Tensor& scores_in) {
  const auto patches = extract_patches(feature);
  const auto scores = scores_in.detach().to(torch::kFloat64).contiguous();
  auto pa = patches.accessor<double, 2>();
  auto sa = scores.accessor<double, 2>();
  const int64_t channels = feature.size(0), height = feature.size(1),
                width = feature.size(2);
  const int64_t n = patches.size(0), d = patches.size(1);

  auto sum = torch::zeros({channels, height, width}, torch::kFloat64);
  auto count = torch::zeros({height, width}, torch::kFloat64);
  auto suma = sum.accessor<double, 3>();
  auto ca = count.accessor<double, 2>();
  for (int64_t i = 0; i < n; ++i) {
    std::vector<double> rebuilt(d, 0.0);
    for (int64_t j = 0; j < n; ++j) {
      for (int64_t t = 0; t < d; ++t) rebuilt[t] += pa[j][t] * sa[i][j];
    }
    const int64_t y = i / width;
    const int64_t x = i % width;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int64_t ty = y + dy;
        const int64_t tx = x + dx;
        if (ty < 0 || ty >= height || tx < 0 || tx >= width) continue;
        ca[ty][tx] += 1.0;
        for (int64_t c = 0; c < channels; ++c) {
          suma[c][ty][tx] += rebuilt[c * 9 + (dy + 1) * 3 + (dx + 1)];
        }
      }
    }
  }
  return sum / count.unsqueeze(0);
}

}  // namespace twinfill::reference
