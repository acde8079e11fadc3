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

#include "test_doctest.hpp"

#include <cmath>
#include <numeric>

#include "support.hpp"
#include "twinfill/kernels.hpp"
#include "twinfill/reference.hpp"

using namespace twinfill;
using namespace twinfill::testing;

namespace {

std::vector<double> plane(const torch::Tensor& t) {
  auto c = t.to(torch::kDouble).contiguous();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

std::vector<double> step_image(int h, int w, int step) {
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[y * w + x] = x >= step ? 1.0 : 0.0;
  return v;
}

std::vector<double> checkerboard(int h, int w, int square) {
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v[y * w + x] = ((y / square + x / square) % 2) ? 1.0 : 0.0;
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("gaussian taps are normalized and symmetric") {
    for (double sigma : {0.5, 1.0, 2.0, 3.3}) {
      const auto taps = kernels::gaussian_taps(sigma);
      CHECK(taps.size() == 2 * static_cast<std::size_t>(std::ceil(3 * sigma)) + 1);
      CHECK(std::accumulate(taps.begin(), taps.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 0; i < taps.size(); ++i) CHECK(taps[i] == taps[taps.size() - 1 - i]);
    }
  }

  TEST_CASE("constant image has no edges") {
    const std::vector<double> flat(24 * 24, 0.37);
    const auto edges = kernels::canny(flat, 24, 24, {});
    CHECK(std::all_of(edges.begin(), edges.end(), [](auto e) { return e == 0; }));
  }

  TEST_CASE("step image yields one vertical line at the step") {
    const int h = 24, w = 24, step = 12;
    const auto edges = kernels::canny(step_image(h, w, step), h, w, {});
    CHECK(edges == reference::canny(step_image(h, w, step), h, w, 2.0, 0.1, 0.2));
    for (int y = 1; y < h - 1; ++y) {
      int count = 0;
      int column = -1;
      for (int x = 0; x < w; ++x) {
        if (edges[y * w + x]) {
          ++count;
          column = x;
        }
      }
      CHECK(count == 1);
      CHECK(std::abs(column - step) <= 1);
    }
  }

  TEST_CASE("checkerboard edges away from junctions sit on square boundaries") {
    const int h = 32, w = 32, sq = 8;
    const auto img = checkerboard(h, w, sq);
    const auto edges = kernels::canny(img, h, w, {});
    CHECK(edges == reference::canny(img, h, w, 2.0, 0.1, 0.2));
    int on = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!edges[y * w + x]) continue;
        ++on;
        const int dx = std::min(x % sq, sq - x % sq);
        const int dy = std::min(y % sq, sq - y % sq);
        if (std::max(dx, dy) >= 4) CHECK(std::min(dx, dy) <= 1);
      }
    }
    CHECK(on > 0);
  }

  TEST_CASE("parallel canny matches the serial reference on smooth random images") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto t = torch::nn::functional::avg_pool2d(
          uniform({1, 1, 40, 36}, seed), torch::nn::functional::AvgPool2dFuncOptions(3).stride(1).padding(1));
      const auto img = plane(t);
      for (double sigma : {1.0, 2.0}) {
        CHECK(kernels::canny(img, 40, 36, {sigma, 0.05, 0.1}) ==
              reference::canny(img, 40, 36, sigma, 0.05, 0.1));
      }
    }
  }

  TEST_CASE("hysteresis keeps weak pixels only when linked to strong ones") {
    // Row: strong, weak, weak | gap | weak alone.
    const std::vector<double> thin = {0.3, 0.15, 0.15, 0.0, 0.15};
    const auto kept = kernels::hysteresis(thin, 1, 5, 0.1, 0.2);
    CHECK(kept == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
  }

  TEST_CASE("mse and ssim agree with the serial oracles") {
    const auto a = plane(uniform({24, 30}, 3));
    const auto b = plane(uniform({24, 30}, 4));
    CHECK(kernels::mean_squared_error(a, b) == doctest::Approx(reference::mse(a, b)).epsilon(1e-12));
    CHECK(std::abs(kernels::ssim(a, b, 24, 30) - reference::ssim(a, b, 24, 30)) < 1e-9);
    CHECK(kernels::ssim(a, a, 24, 30) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
