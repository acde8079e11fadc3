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

#include <torch/torch.h>

#include "twinfill/reference.hpp"

namespace twinfill::reference {

std::pair<torch::Tensor, torch::Tensor> partial_conv(const torch::Tensor& x_in,
                                                     const torch::Tensor& m_in,
                                                     const torch::Tensor& w_in,
                                                     const torch::Tensor& b_in, int stride,
                                                     int padding, int dilation) {
  const auto x = x_in.detach().to(torch::kFloat64).contiguous();
  const auto m = m_in.detach().to(torch::kFloat64).contiguous();
  const auto w = w_in.detach().to(torch::kFloat64).contiguous();
  const bool has_bias = b_in.defined();
  const auto b = has_bias ? b_in.detach().to(torch::kFloat64).contiguous() : torch::Tensor();

  const int64_t batch = x.size(0), channels = x.size(1), height = x.size(2),
                width = x.size(3);
  const int64_t outs = w.size(0), k = w.size(2);
  const int64_t out_h = (height + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
  const int64_t out_w = (width + 2 * padding - dilation * (k - 1) - 1) / stride + 1;

  auto y = torch::zeros({batch, outs, out_h, out_w}, torch::kFloat64);
  auto m_out = torch::zeros({batch, 1, out_h, out_w}, torch::kFloat64);
  auto xa = x.accessor<double, 4>();
  auto ma = m.accessor<double, 4>();
  auto wa = w.accessor<double, 4>();
  auto ya = y.accessor<double, 4>();
  auto moa = m_out.accessor<double, 4>();

  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t oy = 0; oy < out_h; ++oy) {
      for (int64_t ox = 0; ox < out_w; ++ox) {
        // Window bookkeeping: taps inside the image and known taps among them.
        double inside = 0.0;
        double known = 0.0;
        for (int64_t ky = 0; ky < k; ++ky) {
          for (int64_t kx = 0; kx < k; ++kx) {
            const int64_t iy = oy * stride - padding + ky * dilation;
            const int64_t ix = ox * stride - padding + kx * dilation;
            if (iy < 0 || iy >= height || ix < 0 || ix >= width) continue;
            inside += 1.0;
            known += ma[n][0][iy][ix];
          }
        }
        if (known <= 0.0) continue;
        moa[n][0][oy][ox] = 1.0;
        const double scale = (inside * channels) / (known * channels);
        for (int64_t o = 0; o < outs; ++o) {
          double acc = 0.0;
          for (int64_t c = 0; c < channels; ++c) {
            for (int64_t ky = 0; ky < k; ++ky) {
              for (int64_t kx = 0; kx < k; ++kx) {
                const int64_t iy = oy * stride - padding + ky * dilation;
                const int64_t ix = ox * stride - padding + kx * dilation;
                if (iy < 0 || iy >= height || ix < 0 || ix >= width) continue;
                acc += wa[o][c][ky][kx] * xa[n][c][iy][ix] * ma[n][0][iy][ix];
              }
            }
          }
          ya[n][o][oy][ox] = acc * scale + (has_bias ? b[o].item<double>() : 0.0);
        }
      }
    }
  }
  return {y, m_out};
}

}  // namespace twinfill::reference
