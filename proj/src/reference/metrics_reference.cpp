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

#include <cmath>

#include "twinfill/reference.hpp"

namespace twinfill::reference {

double mse(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

double ssim(const std::vector<double>& a, const std::vector<double>& b, int height,
            int width) {
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double weights[kWindow][kWindow];
  double weight_sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    for (int j = 0; j < kWindow; ++j) {
      const double di = i - kWindow / 2;
      const double dj = j - kWindow / 2;
      weights[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
      weight_sum += weights[i][j];
    }
  }
  for (auto& row : weights) {
    for (double& w : row) w /= weight_sum;
  }

  double total = 0.0;
  int count = 0;
  for (int y = 0; y + kWindow <= height; ++y) {
    for (int x = 0; x + kWindow <= width; ++x) {
      double mu_a = 0.0;
      double mu_b = 0.0;
      for (int i = 0; i < kWindow; ++i) {
        for (int j = 0; j < kWindow; ++j) {
          mu_a += weights[i][j] * a[(y + i) * width + x + j];
          mu_b += weights[i][j] * b[(y + i) * width + x + j];
        }
      }
      double var_a = 0.0;
      double var_b = 0.0;
      double cov = 0.0;
      for (int i = 0; i < kWindow; ++i) {
        for (int j = 0; j < kWindow; ++j) {
          const double da = a[(y + i) * width + x + j] - mu_a;
          const double db = b[(y + i) * width + x + j] - mu_b;
          var_a += weights[i][j] * da * da;
          var_b += weights[i][j] * db * db;
          cov += weights[i][j] * da * db;
        }
      }
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / count;
}

}  // namespace twinfill::reference
