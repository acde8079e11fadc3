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

#include "support.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>
#include <opencv2/core.hpp>

#include "twinfill/datapipe.hpp"
#include "twinfill/image_io.hpp"
#include "twinfill/trainer.hpp"

namespace twinfill::testing {

GradReport gradcheck(const std::function<torch::Tensor(const torch::Tensor&)>& f,
                     const torch::Tensor& input, double tolerance, int max_probes, double h) {
  auto x = input.detach().clone().to(torch::kDouble).requires_grad_(true);
  auto y = f(x);
  auto analytic = torch::autograd::grad({y}, {x}, {}, false, false, true)[0];
  if (!analytic.defined()) analytic = torch::zeros_like(x);
  analytic = analytic.contiguous();

  GradReport report;
  const int64_t n = x.numel();
  const int64_t probes = std::min<int64_t>(n, max_probes);
  auto base = x.detach().clone().contiguous();
  auto* data = base.data_ptr<double>();
  const auto* grad = analytic.data_ptr<double>();
  torch::NoGradGuard no_grad;
  for (int64_t p = 0; p < probes; ++p) {
    const int64_t i = probes == n ? p : (p * n) / probes;
    const double saved = data[i];
    data[i] = saved + h;
    const double plus = f(base).item<double>();
    data[i] = saved - h;
    const double minus = f(base).item<double>();
    data[i] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    const double rel = std::abs(numeric - grad[i]) / scale;
    report.worst = std::max(report.worst, rel);
    ++report.probed;
    if (rel < tolerance) ++report.within;
  }
  return report;
}

torch::Tensor uniform(std::vector<int64_t> shape, std::uint64_t seed, double lo, double hi) {
  auto t = torch::empty(shape, torch::kDouble);
  std::mt19937_64 rng(seed);
  auto* p = t.data_ptr<double>();
  for (int64_t i = 0; i < t.numel(); ++i) {
    p[i] = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  return t;
}

torch::Tensor random_mask(std::vector<int64_t> shape, std::uint64_t seed, double hole) {
  return (uniform(std::move(shape), seed) >= hole).to(torch::kDouble);
}

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kDouble) - b.to(torch::kDouble)).abs().max().item<double>();
}

bool bit_equal(const torch::Tensor& a, const torch::Tensor& b) {
  return a.sizes() == b.sizes() && a.scalar_type() == b.scalar_type() && torch::equal(a, b);
}

RunConfig toy_config() {
  RunConfig c;
  c.model.image_size = 32;
  c.model.levels = 4;
  c.model.base_channels = 8;
  c.model.max_channels = 32;
  c.model.feature_channels = 8;
  c.disc.base_channels = 8;
  c.disc.head_channels = 8;
  c.train.batch_size = 4;
  c.train.max_iters = 10;
  c.data.synthetic_samples = 8;
  return c;
}

TempDir::TempDir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  for (;;) {
    path_ = std::filesystem::temp_directory_path() /
            ("twinfill_" + tag + "_" + std::to_string(rng() % 1000000000));
    if (std::filesystem::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_toy_checkpoint(const std::filesystem::path& path, int64_t iterations) {
  auto config = toy_config();
  config.train.max_iters = iterations;
  Trainer trainer(config);
  const auto data = synth_dataset(8, 32, 5);
  trainer.fit(data);
  trainer.save_checkpoint(path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> random_rgb_png(int height, int width, std::uint64_t seed) {
  cv::Mat m(height, width, CV_8UC3);
  std::mt19937_64 rng(seed);
  for (auto it = m.begin<cv::Vec3b>(); it != m.end<cv::Vec3b>(); ++it) {
    for (int c = 0; c < 3; ++c) (*it)[c] = static_cast<std::uint8_t>(rng() & 0xff);
  }
  return encode_png_mat(m);
}

std::vector<std::uint8_t> random_mask_png(int height, int width, std::uint64_t seed, double hole) {
  cv::Mat m(height, width, CV_8UC1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto it = m.begin<std::uint8_t>(); it != m.end<std::uint8_t>(); ++it) {
    *it = u(rng) < hole ? 0 : 255;
  }
  return encode_png_mat(m);
}

namespace {

std::string as_string(const std::vector<std::uint8_t>& bytes) {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

}  // namespace

HttpResult post_inpaint(int port, const std::vector<std::uint8_t>& image,
                        const std::vector<std::uint8_t>& mask,
                        const std::vector<std::pair<std::string, std::string>>& fields) {
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);
  httplib::MultipartFormDataItems items = {
      {"image", as_string(image), "image.png", "image/png"},
      {"mask", as_string(mask), "mask.png", "image/png"},
  };
  for (const auto& [name, value] : fields) items.push_back({name, value, "", ""});
  auto res = client.Post("/v1/inpaint", items);
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

HttpResult get_health(int port) {
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/v1/health");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

}  // namespace twinfill::testing
