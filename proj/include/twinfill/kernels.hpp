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

#ifndef TWINFILL_KERNELS_HPP_
#define TWINFILL_KERNELS_HPP_

#include <cstdint>
#include <span>
#include <vector>

// OpenMP-parallel pixel kernels on row-major double planes. Each has a
// straightforward serial counterpart in twinfill/reference.hpp that the tests
// and the benchmark compare against.
namespace twinfill::kernels {

struct CannyParams {
  double sigma = 2.0;
  double low = 0.1;
  double high = 0.2;
};

// Normalized taps over radius ceil(3 sigma).
std::vector<double> gaussian_taps(double sigma);

// Separable blur, replicate border.
std::vector<double> gaussian_blur(std::span<const double> plane, int height, int width,
                                  double sigma);

struct Gradients {
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<double> magnitude;
};

// Unnormalized 3x3 Sobel, replicate border.
Gradients sobel(std::span<const double> plane, int height, int width);

// Keeps a pixel when it is a local maximum along the quantized gradient
// direction: >= the forward neighbour and > the backward one, both up to a
// relative tolerance of 1e-9, so a plateau of two maxima that differ only by
// rounding keeps exactly one. The outer one-pixel frame is zeroed.
std::vector<double> non_max_suppression(const Gradients& grad, int height, int width);

// 8-connected hysteresis: pixels >= low survive when linked to one >= high.
std::vector<std::uint8_t> hysteresis(std::span<const double> thin, int height, int width,
                                     double low, double high);

std::vector<std::uint8_t> canny(std::span<const double> gray, int height, int width,
                                const CannyParams& params);

double mean_squared_error(std::span<const double> a, std::span<const double> b);

// Mean SSIM over every valid 11x11 window position (gaussian sigma 1.5,
// k1 = 0.01, k2 = 0.03, dynamic range 1).
double ssim(std::span<const double> a, std::span<const double> b, int height, int width);

}  // namespace twinfill::kernels

#endif  // TWINFILL_KERNELS_HPP_
