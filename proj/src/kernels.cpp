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

#include "twinfill/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "twinfill/errors.hpp"

namespace twinfill::kernels {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;
constexpr double kTan22_5 = 0.41421356237309503;
constexpr double kTieTolerance = 1e-9;

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

void check_plane(std::span<const double> plane, int height, int width) {
  if (height <= 0 || width <= 0 ||
      plane.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw InvalidInput("plane size does not match height*width");
  }
}

std::vector<double> ssim_taps() {
  std::vector<double> taps(kSsimWindow);
  const int radius = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - radius;
    taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable weighted sum over valid window positions only.
std::vector<double> valid_window_sum(const std::vector<double>& plane, int height, int width,
                                     const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int out_h = height - k + 1;
  const int out_w = width - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(height) * out_w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += taps[t] * plane[y * width + x + t];
      rows[y * out_w + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_h) * out_w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += taps[t] * rows[(y + t) * out_w + x];
      out[y * out_w + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw InvalidConfig("gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

std::vector<double> gaussian_blur(std::span<const double> plane, int height, int width,
                                  double sigma) {
  check_plane(plane, height, width);
  const auto taps = gaussian_taps(sigma);
  const int radius = static_cast<int>(taps.size()) / 2;
  std::vector<double> horizontal(plane.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        acc += taps[t + radius] * plane[y * width + clamp_index(x + t, width)];
      }
      horizontal[y * width + x] = acc;
    }
  }
  std::vector<double> out(plane.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        acc += taps[t + radius] * horizontal[clamp_index(y + t, height) * width + x];
      }
      out[y * width + x] = acc;
    }
  }
  return out;
}

Gradients sobel(std::span<const double> plane, int height, int width) {
  check_plane(plane, height, width);
  Gradients g;
  g.gx.resize(plane.size());
  g.gy.resize(plane.size());
  g.magnitude.resize(plane.size());
  auto at = [&](int y, int x) {
    return plane[clamp_index(y, height) * width + clamp_index(x, width)];
  };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
      const int i = y * width + x;
      g.gx[i] = gx;
      g.gy[i] = gy;
      g.magnitude[i] = std::hypot(gx, gy);
    }
  }
  return g;
}

std::vector<double> non_max_suppression(const Gradients& grad, int height, int width) {
  std::vector<double> thin(grad.magnitude.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 1; y < height - 1; ++y) {
    for (int x = 1; x < width - 1; ++x) {
      const int i = y * width + x;
      const double m = grad.magnitude[i];
      if (m == 0.0) continue;
      const double ax = std::abs(grad.gx[i]);
      const double ay = std::abs(grad.gy[i]);
      const int sx = grad.gx[i] > 0 ? 1 : -1;
      const int sy = grad.gy[i] > 0 ? 1 : -1;
      int dx = sx;
      int dy = sy;
      if (ay <= kTan22_5 * ax) {
        dy = 0;
      } else if (ax <= kTan22_5 * ay) {
        dx = 0;
      }
      const double forward = grad.magnitude[(y + dy) * width + (x + dx)];
      const double backward = grad.magnitude[(y - dy) * width + (x - dx)];
      if (m >= forward * (1.0 - kTieTolerance) && m > backward * (1.0 + kTieTolerance)) thin[i] = m;
    }
  }
  return thin;
}

std::vector<std::uint8_t> hysteresis(std::span<const double> thin, int height, int width,
                                     double low, double high) {
  check_plane(thin, height, width);
  const int n = height * width;
  std::vector<std::uint8_t> edges(n, 0);
  std::vector<int> stack;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    if (thin[i] >= high) edges[i] = 1;
  }
  for (int i = 0; i < n; ++i) {
    if (edges[i]) stack.push_back(i);
  }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
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
          stack.push_back(j);
        }
      }
    }
  }
  return edges;
}

std::vector<std::uint8_t> canny(std::span<const double> gray, int height, int width,
                                const CannyParams& params) {
  if (!(params.sigma > 0.0)) throw InvalidConfig("canny sigma must be positive");
  if (params.low > params.high) throw InvalidConfig("canny low threshold exceeds high");
  const auto blurred = gaussian_blur(gray, height, width, params.sigma);
  const auto grad = sobel(blurred, height, width);
  const auto thin = non_max_suppression(grad, height, width);
  return hysteresis(thin, height, width, params.low, params.high);
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw InvalidInput("mse: size mismatch or empty");
  const auto n = static_cast<std::int64_t>(a.size());
  double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(n);
}

double ssim(std::span<const double> a, std::span<const double> b, int height, int width) {
  check_plane(a, height, width);
  check_plane(b, height, width);
  if (height < kSsimWindow || width < kSsimWindow) {
    throw InvalidInput("ssim needs at least 11x11 pixels");
  }
  const auto taps = ssim_taps();
  const std::size_t n = a.size();
  std::vector<double> pa(a.begin(), a.end());
  std::vector<double> pb(b.begin(), b.end());
  std::vector<double> aa(n), bb(n), ab(n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = pa[i] * pa[i];
    bb[i] = pb[i] * pb[i];
    ab[i] = pa[i] * pb[i];
  }
  const auto mu_a = valid_window_sum(pa, height, width, taps);
  const auto mu_b = valid_window_sum(pb, height, width, taps);
  const auto e_aa = valid_window_sum(aa, height, width, taps);
  const auto e_bb = valid_window_sum(bb, height, width, taps);
  const auto e_ab = valid_window_sum(ab, height, width, taps);
  const auto m = static_cast<std::int64_t>(mu_a.size());
  double total = 0.0;
#pragma omp parallel for reduction(+ : total) schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2)) /
             ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
  }
  return total / static_cast<double>(m);
}

}  // namespace twinfill::kernels
