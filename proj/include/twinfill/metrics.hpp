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

#ifndef TWINFILL_METRICS_HPP_
#define TWINFILL_METRICS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/types.h>

#include "twinfill/datapipe.hpp"

namespace twinfill {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(peak^2 / MSE), capped at 100 dB.
double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0);
double psnr_from_mse(double mse, double peak = 1.0);

// PSNR over hole pixels only (mask == 0), all channels. Cap when the mask has
// no holes.
double masked_psnr(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& mask,
                   double peak = 1.0);

// Mean SSIM on BT.601 grayscale. Accepts (3,H,W), (1,H,W) or (H,W).
double ssim(const torch::Tensor& a, const torch::Tensor& b);

struct MetricReport {
  MaskBucket bucket;
  double psnr = 0.0;
  double ssim = 0.0;
  int64_t n_samples = 0;
};

// Per-bucket accumulator. The 0-20/20-40/40-60 rows are always reported;
// coarser-than-60% rows appear only when they hold samples.
class MetricTable {
 public:
  void add(const torch::Tensor& prediction, const torch::Tensor& target,
           const torch::Tensor& mask);
  void add(const MaskBucket& coarse_bucket, double psnr_db, double ssim_value);

  std::vector<MetricReport> rows() const;
  nlohmann::json to_json() const;
  std::string to_text() const;

 private:
  struct Sums {
    double psnr = 0.0;
    double ssim = 0.0;
    int64_t n = 0;
  };
  std::map<MaskBucket, Sums> sums_;
};

}  // namespace twinfill

#endif  // TWINFILL_METRICS_HPP_
