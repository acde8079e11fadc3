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

#ifndef TWINFILL_TESTS_SUPPORT_HPP_
#define TWINFILL_TESTS_SUPPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "twinfill/config.hpp"

namespace twinfill::testing {

// Central-difference gradient check. `f` maps the current value of `input`
// (a double leaf tensor) to a scalar. Probes up to `max_probes` coordinates
// spread evenly over the tensor.
struct GradReport {
  int64_t probed = 0;
  int64_t within = 0;       // rel err < tolerance
  double worst = 0.0;       // largest rel err seen
  double fraction() const { return probed == 0 ? 1.0 : static_cast<double>(within) / probed; }
};

GradReport gradcheck(const std::function<torch::Tensor(const torch::Tensor&)>& f,
                     const torch::Tensor& input, double tolerance, int max_probes = 48,
                     double h = 1e-5);

// Deterministic double tensor in [lo, hi).
torch::Tensor uniform(std::vector<int64_t> shape, std::uint64_t seed, double lo = 0.0,
                      double hi = 1.0);
// Deterministic binary mask (B,1,H,W) with roughly `hole` fraction of zeros.
torch::Tensor random_mask(std::vector<int64_t> shape, std::uint64_t seed, double hole);

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b);
bool bit_equal(const torch::Tensor& a, const torch::Tensor& b);

// Small 32x32 model used by trainer, CLI and service tests.
RunConfig toy_config();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Trains a toy model for `iterations` steps and saves it to `path`.
void write_toy_checkpoint(const std::filesystem::path& path, int64_t iterations = 3);

std::string read_text(const std::filesystem::path& path);

// Random RGB PNG and an 8-bit gray mask PNG (255 = known, `hole` fraction 0).
std::vector<std::uint8_t> random_rgb_png(int height, int width, std::uint64_t seed);
std::vector<std::uint8_t> random_mask_png(int height, int width, std::uint64_t seed, double hole);

struct HttpResult {
  int status = 0;
  std::string body;
};

// Multipart POST of image and mask plus extra text fields to
// http://127.0.0.1:<port>/v1/inpaint.
HttpResult post_inpaint(int port, const std::vector<std::uint8_t>& image,
                        const std::vector<std::uint8_t>& mask,
                        const std::vector<std::pair<std::string, std::string>>& fields = {});
HttpResult get_health(int port);

}  // namespace twinfill::testing

#endif  // TWINFILL_TESTS_SUPPORT_HPP_
