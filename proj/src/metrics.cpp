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

#include "twinfill/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <torch/torch.h>

#include "twinfill/errors.hpp"
#include "twinfill/kernels.hpp"

namespace twinfill {

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw InvalidInput(std::string(what) + ": shape mismatch");
}

torch::Tensor gray_plane(const torch::Tensor& t) {
  auto x = t.detach().to(torch::kCPU, torch::kDouble);
  if (x.dim() == 3 && x.size(0) == 3) x = to_grayscale(x);
  if (x.dim() == 3 && x.size(0) == 1) x = x.squeeze(0);
  if (x.dim() != 2) throw InvalidInput("ssim expects (3,H,W), (1,H,W) or (H,W)");
  return x.contiguous();
}

}  // namespace

double psnr_from_mse(double mse, double peak) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak) {
  require_same_shape(a, b, "psnr");
  const auto diff = a.detach().to(torch::kDouble) - b.detach().to(torch::kDouble);
  return psnr_from_mse(diff.square().mean().item<double>(), peak);
}

double masked_psnr(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& mask,
                   double peak) {
  require_same_shape(a, b, "masked_psnr");
  const auto hole = (1.0 - mask.detach().to(torch::kDouble)).expand_as(a);
  const double count = hole.sum().item<double>();
  if (count <= 0.0) return kPsnrCap;
  const auto diff = a.detach().to(torch::kDouble) - b.detach().to(torch::kDouble);
  return psnr_from_mse((diff.square() * hole).sum().item<double>() / count, peak);
}

double ssim(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "ssim");
  const auto x = gray_plane(a);
  const auto y = gray_plane(b);
  const auto h = static_cast<int>(x.size(0));
  const auto w = static_cast<int>(x.size(1));
  return kernels::ssim({x.data_ptr<double>(), static_cast<std::size_t>(x.numel())},
                       {y.data_ptr<double>(), static_cast<std::size_t>(y.numel())}, h, w);
}

void MetricTable::add(const torch::Tensor& prediction, const torch::Tensor& target,
                      const torch::Tensor& mask) {
  add(classify_mask_ratio(mask).coarse(), psnr(prediction, target), ssim(prediction, target));
}

void MetricTable::add(const MaskBucket& coarse_bucket, double psnr_db, double ssim_value) {
  auto& s = sums_[coarse_bucket];
  s.psnr += psnr_db;
  s.ssim += ssim_value;
  ++s.n;
}

std::vector<MetricReport> MetricTable::rows() const {
  std::vector<MetricReport> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int lower = 0; lower < 100; lower += 20) {
    const MaskBucket bucket(lower, lower + 20);
    const auto it = sums_.find(bucket);
    if (it == sums_.end()) {
      if (lower < 60) out.push_back({bucket, nan, nan, 0});
      continue;
    }
    const auto& s = it->second;
    out.push_back({bucket, s.psnr / s.n, s.ssim / s.n, s.n});
  }
  return out;
}

nlohmann::json MetricTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows()) {
    nlohmann::json row = {{"bucket", r.bucket.label()}, {"n_samples", r.n_samples}};
    row["psnr"] = r.n_samples > 0 ? nlohmann::json(r.psnr) : nlohmann::json(nullptr);
    row["ssim"] = r.n_samples > 0 ? nlohmann::json(r.ssim) : nlohmann::json(nullptr);
    rows_json.push_back(std::move(row));
  }
  return {{"metrics", {"psnr", "ssim"}}, {"rows", rows_json}};
}

std::string MetricTable::to_text() const {
  const auto all = rows();
  std::string header = "Metric ";
  std::string psnr_line = "PSNR   ";
  std::string ssim_line = "SSIM   ";
  char cell[32];
  for (const auto& r : all) {
    std::snprintf(cell, sizeof cell, "%10s", r.bucket.label().c_str());
    header += cell;
    if (r.n_samples > 0) {
      std::snprintf(cell, sizeof cell, "%10.2f", r.psnr);
      psnr_line += cell;
      std::snprintf(cell, sizeof cell, "%10.4f", r.ssim);
      ssim_line += cell;
    } else {
      std::snprintf(cell, sizeof cell, "%10s", "-");
      psnr_line += cell;
      ssim_line += cell;
    }
  }
  return header + "\n" + psnr_line + "\n" + ssim_line + "\n";
}

}  // namespace twinfill
