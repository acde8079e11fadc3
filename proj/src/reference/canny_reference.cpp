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
#include <deque>
#include <numbers>

#include "twinfill/reference.hpp"

namespace twinfill::reference {

std::vector<std::uint8_t> canny(const std::vector<double>& gray, int height, int width,
                                double sigma, double low, double high) {
  auto px = [&](const std::vector<double>& p, int y, int x) {
    y = std::clamp(y, 0, height - 1);
    x = std::clamp(x, 0, width - 1);
    return p[y * width + x];
  };

  // 2-D gaussian evaluated directly.
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel;
  double kernel_sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      kernel.push_back(w);
      kernel_sum += w;
    }
  }
  const int side = 2 * radius + 1;
  std::vector<double> blurred(gray.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          acc += kernel[(dy + radius) * side + dx + radius] * px(gray, y + dy, x + dx);
        }
      }
      blurred[y * width + x] = acc / kernel_sum;
    }
  }

  const int sobel_x[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int sobel_y[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  std::vector<double> gx(gray.size()), gy(gray.size()), mag(gray.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sx = 0.0;
      double sy = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double v = px(blurred, y + i - 1, x + j - 1);
          sx += sobel_x[i][j] * v;
          sy += sobel_y[i][j] * v;
        }
      }
      gx[y * width + x] = sx;
      gy[y * width + x] = sy;
      mag[y * width + x] = std::sqrt(sx * sx + sy * sy);
    }
  }

  // Angle bins in degrees over [0,180).
  std::vector<double> thin(gray.size(), 0.0);
  for (int y = 1; y < height - 1; ++y) {
    for (int x = 1; x < width - 1; ++x) {
      const int i = y * width + x;
      if (mag[i] == 0.0) continue;
      double angle = std::atan2(gy[i], gx[i]) * 180.0 / std::numbers::pi;
      // Direction of +gradient as a unit step.
      int step_x = 0;
      int step_y = 0;
      const double a = angle < 0 ? angle + 360.0 : angle;
      const int octant = static_cast<int>(std::floor((a + 22.5) / 45.0)) % 8;
      switch (octant) {
        case 0: step_x = 1; step_y = 0; break;
        case 1: step_x = 1; step_y = 1; break;
        case 2: step_x = 0; step_y = 1; break;
        case 3: step_x = -1; step_y = 1; break;
        case 4: step_x = -1; step_y = 0; break;
        case 5: step_x = -1; step_y = -1; break;
        case 6: step_x = 0; step_y = -1; break;
        default: step_x = 1; step_y = -1; break;
      }
      const double ahead = mag[(y + step_y) * width + x + step_x];
      const double behind = mag[(y - step_y) * width + x - step_x];
      if (mag[i] >= ahead * (1.0 - 1e-9) && mag[i] > behind * (1.0 + 1e-9)) thin[i] = mag[i];
    }
  }

  std::vector<std::uint8_t> edges(gray.size(), 0);
  std::deque<int> queue;
  for (int i = 0; i < height * width; ++i) {
    if (thin[i] >= high) {
      edges[i] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const int y = i / width;
    const int x = i % width;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int ny = y + dy;
        const int nx = x + dx;
        if (ny < 0 || ny >= height || nx < 0 || nx >= width) continue;
        const int j = ny * width + nx;
        if (!edges[j] && thin[j] >= low) {
          edges[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  return edges;
}

}  // namespace twinfill::reference
