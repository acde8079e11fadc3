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

#include "twinfill/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "twinfill/errors.hpp"
#include "twinfill/image_io.hpp"

namespace twinfill {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Portable uniform draws; std distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

void require_shape(const torch::Tensor& t, int64_t channels, const char* what) {
  if (!t.defined() || t.dim() != 3 || t.size(0) != channels) {
    throw InvalidInput(std::string(what) + ": expected (" + std::to_string(channels) +
                       ",H,W) tensor");
  }
}

double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

std::vector<double> to_plane(const torch::Tensor& plane) {
  auto t = plane.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  return {t.data_ptr<double>(), t.data_ptr<double>() + t.numel()};
}

}  // namespace

MaskBucket::MaskBucket(int lower_percent, int upper_percent)
    : lower(lower_percent), upper(upper_percent) {
  const int width = upper - lower;
  if ((width != 10 && width != 20) || lower < 0 || upper > 100 || lower % width != 0) {
    throw InvalidInput("mask bucket must be an aligned 10- or 20-point interval inside [0,100]");
  }
}

MaskBucket MaskBucket::coarse() const {
  MaskBucket b;
  b.lower = lower / 20 * 20;
  b.upper = b.lower + 20;
  return b;
}

std::string MaskBucket::label() const {
  return std::to_string(lower) + "-" + std::to_string(upper) + "%";
}

torch::Tensor to_grayscale(const torch::Tensor& image) {
  const int64_t channel_dim = image.dim() == 4 ? 1 : 0;
  if ((image.dim() != 3 && image.dim() != 4) || image.size(channel_dim) != 3) {
    throw InvalidInput("to_grayscale expects 3 channels");
  }
  auto weights = torch::tensor({0.299, 0.587, 0.114}, image.options());
  auto shape = image.dim() == 4 ? std::vector<int64_t>{1, 3, 1, 1}
                                : std::vector<int64_t>{3, 1, 1};
  return (image * weights.view(shape)).sum(channel_dim, /*keepdim=*/true);
}

torch::Tensor extract_edges(const torch::Tensor& gray, const EdgeParams& params) {
  require_shape(gray, 1, "extract_edges");
  if (!(params.sigma > 0.0)) throw InvalidConfig("edge sigma must be positive");
  const int height = static_cast<int>(gray.size(1));
  const int width = static_cast<int>(gray.size(2));
  const auto edges = kernels::canny(to_plane(gray), height, width, params);
  auto out = torch::empty({1, height, width}, torch::kFloat32);
  std::transform(edges.begin(), edges.end(), out.data_ptr<float>(),
                 [](std::uint8_t e) { return static_cast<float>(e); });
  return out;
}

double hole_percent(const torch::Tensor& mask) {
  const int64_t total = mask.numel();
  if (total == 0) throw InvalidInput("empty mask");
  const int64_t holes = (mask < 0.5).sum().item<int64_t>();
  return 100.0 * static_cast<double>(holes) / static_cast<double>(total);
}

MaskBucket classify_mask_ratio(const torch::Tensor& mask) {
  const int64_t total = mask.numel();
  if (total == 0) throw InvalidInput("empty mask");
  const int64_t holes = (mask < 0.5).sum().item<int64_t>();
  // floor(100 * holes / total / 10) * 10 in exact integer arithmetic.
  int lower = static_cast<int>((100 * holes) / (10 * total)) * 10;
  lower = std::min(lower, 90);
  return MaskBucket(lower, lower + 10);
}

Sample Sample::from(const torch::Tensor& image, const torch::Tensor& mask,
                    const EdgeParams& edges) {
  require_shape(image, 3, "sample image");
  require_shape(mask, 1, "sample mask");
  if (image.size(1) != mask.size(1) || image.size(2) != mask.size(2)) {
    throw InvalidInput("mask and image sizes differ");
  }
  Sample s;
  s.image_gt = image.to(torch::kFloat32).contiguous();
  s.mask = (mask.to(torch::kFloat32) >= 0.5).to(torch::kFloat32);
  s.gray_gt = to_grayscale(s.image_gt).clamp(0.0, 1.0);
  s.edge_gt = extract_edges(s.gray_gt, edges);
  s.image_in = s.image_gt * s.mask;
  s.edge_in = s.edge_gt * s.mask;
  s.gray_in = s.gray_gt * s.mask;
  return s;
}

void Sample::validate() const {
  require_shape(image_gt, 3, "image_gt");
  for (const auto* t : {&edge_gt, &gray_gt, &mask, &edge_in, &gray_in}) {
    require_shape(*t, 1, "sample plane");
  }
  require_shape(image_in, 3, "image_in");
  for (const auto* t : {&edge_gt, &gray_gt, &mask, &image_in, &edge_in, &gray_in}) {
    if (t->size(1) != height() || t->size(2) != width()) {
      throw InvalidInput("sample fields disagree on spatial size");
    }
  }
  if (!((mask == 0) | (mask == 1)).all().item<bool>()) {
    throw InvalidInput("mask is not binary");
  }
  if (!((edge_gt == 0) | (edge_gt == 1)).all().item<bool>()) {
    throw InvalidInput("edge map is not binary");
  }
  if (!torch::equal(image_in, image_gt * mask) || !torch::equal(edge_in, edge_gt * mask) ||
      !torch::equal(gray_in, gray_gt * mask)) {
    throw InvalidInput("corrupted fields are not the masked ground truth");
  }
}

Batch Batch::to(torch::Dtype dtype) const {
  return Batch{image_gt.to(dtype), edge_gt.to(dtype), gray_gt.to(dtype), mask.to(dtype),
               image_in.to(dtype), edge_in.to(dtype), gray_in.to(dtype)};
}

Batch collate(std::span<const Sample> samples) {
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return collate(samples, all);
}

Batch collate(std::span<const Sample> samples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidInput("cannot collate an empty batch");
  auto stack = [&](auto member) {
    std::vector<torch::Tensor> parts;
    parts.reserve(indices.size());
    for (std::size_t i : indices) parts.push_back(samples[i].*member);
    return torch::stack(parts);
  };
  return Batch{stack(&Sample::image_gt), stack(&Sample::edge_gt), stack(&Sample::gray_gt),
               stack(&Sample::mask),     stack(&Sample::image_in), stack(&Sample::edge_in),
               stack(&Sample::gray_in)};
}

torch::Tensor synth_mask(int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  const int side = std::min(height, width);
  const double target = rng.uniform(0.02, 0.6);
  for (int attempt = 0;; ++attempt) {
    cv::Mat canvas(height, width, CV_8UC1, cv::Scalar(255));
    double hole = 0.0;
    while (hole < target) {
      if (rng.uniform() < 0.35) {
        const int w = rng.integer(std::max(1, side / 8), std::max(1, side / 2));
        const int h = rng.integer(std::max(1, side / 8), std::max(1, side / 2));
        const int x = rng.integer(0, width - 1);
        const int y = rng.integer(0, height - 1);
        cv::rectangle(canvas, cv::Rect(x - w / 2, y - h / 2, w, h), cv::Scalar(0),
                      cv::FILLED);
      } else {
        const int vertices = rng.integer(3, 7);
        const int thickness = rng.integer(std::max(1, side / 16), std::max(2, side / 6));
        cv::Point p(rng.integer(0, width - 1), rng.integer(0, height - 1));
        for (int v = 0; v < vertices; ++v) {
          const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double length = rng.uniform(side / 8.0, side / 3.0);
          cv::Point q(p.x + static_cast<int>(std::lround(length * std::cos(angle))),
                      p.y + static_cast<int>(std::lround(length * std::sin(angle))));
          cv::line(canvas, p, q, cv::Scalar(0), thickness, cv::LINE_8);
          p = q;
        }
      }
      hole = 1.0 - cv::countNonZero(canvas) / static_cast<double>(height * width);
    }
    if (hole <= 0.6 || attempt >= 64) {
      auto mask = torch::from_blob(canvas.data, {1, height, width}, torch::kUInt8)
                      .to(torch::kFloat32)
                      .div(255.0);
      return mask;
    }
  }
}

torch::Tensor synth_texture(int size, std::uint64_t seed) {
  Rng rng(seed);
  double c1[3], c2[3];
  for (int c = 0; c < 3; ++c) {
    c1[c] = rng.uniform(0.05, 0.95);
    c2[c] = rng.uniform(0.05, 0.95);
  }
  const int kind = rng.integer(0, 2);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double period = rng.uniform(size / 4.0, size / 1.5);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);

  auto image = torch::empty({3, size, size}, torch::kFloat32);
  auto acc = image.accessor<float, 3>();
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = x * ct + y * st;
      double t = 0.0;
      switch (kind) {
        case 0:  // soft stripes
          t = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * u / period + phase);
          break;
        case 1: {  // checker
          const int cx = static_cast<int>(std::floor((x + phase) / (period / 2.0)));
          const int cy = static_cast<int>(std::floor((y + phase) / (period / 2.0)));
          t = ((cx + cy) & 1) ? 1.0 : 0.0;
          break;
        }
        default:  // linear ramp
          t = std::clamp(u / (size * 1.5) + 0.25, 0.0, 1.0);
          break;
      }
      for (int c = 0; c < 3; ++c) {
        acc[c][y][x] = static_cast<float>(quantize8(c1[c] + (c2[c] - c1[c]) * t));
      }
    }
  }
  return image;
}

torch::Tensor SyntheticMaskSource::mask_for(std::size_t index, int height,
                                            int width) const {
  return synth_mask(height, width, splitmix64(seed_ ^ (0x6d61736bULL + index)));
}

MaskFileSource::MaskFileSource(std::vector<std::filesystem::path> files)
    : files_(std::move(files)) {
  if (files_.empty()) throw IoError("mask file list is empty");
}

MaskFileSource MaskFileSource::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return MaskFileSource(std::move(files));
}

torch::Tensor MaskFileSource::mask_for(std::size_t index, int height, int width) const {
  return resize_mask(read_mask(files_[index % files_.size()]), height, width);
}

std::vector<Sample> synth_dataset(int n, int size, std::uint64_t seed,
                                  const EdgeParams& edges) {
  if (n <= 0) throw InvalidConfig("synth_dataset needs n > 0");
  if (size < 8) throw InvalidConfig("synth_dataset needs size >= 8");
  SyntheticMaskSource masks(seed);
  std::vector<Sample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto texture = synth_texture(size, splitmix64(seed ^ (0x74657874ULL + i)));
    out.push_back(Sample::from(texture, masks.mask_for(i, size, size), edges));
  }
  return out;
}

Sample make_sample(const std::filesystem::path& image_path, const torch::Tensor& mask,
                   int target_size, const EdgeParams& edges) {
  auto image = read_image(image_path);
  auto m = mask;
  if (m.dim() != 3 || m.size(0) != 1) throw InvalidInput("mask must be (1,H,W)");
  if (target_size > 0) {
    image = resize_image(image, target_size, target_size);
    m = resize_mask(m, target_size, target_size);
  }
  if (image.size(1) != m.size(1) || image.size(2) != m.size(2)) {
    throw InvalidInput("mask/image size mismatch for " + image_path.string());
  }
  return Sample::from(image, m, edges);
}

Sample make_sample(const std::filesystem::path& image_path, const MaskSource& masks,
                   std::size_t index, int target_size, const EdgeParams& edges) {
  if (target_size > 0) {
    return make_sample(image_path, masks.mask_for(index, target_size, target_size),
                       target_size, edges);
  }
  auto image = read_image(image_path);
  const int h = static_cast<int>(image.size(1));
  const int w = static_cast<int>(image.size(2));
  return Sample::from(image, masks.mask_for(index, h, w), edges);
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  const auto base = manifest.parent_path();
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos || line[begin] == '#') continue;
    const auto end = line.find_last_not_of(" \t\r");
    std::filesystem::path p(line.substr(begin, end - begin + 1));
    out.push_back(p.is_absolute() ? p : base / p);
  }
  return out;
}

std::vector<Sample> load_dataset(std::span<const std::filesystem::path> images,
                                 const MaskSource& masks, int target_size,
                                 const EdgeParams& edges) {
  std::vector<Sample> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    out.push_back(make_sample(images[i], masks, i, target_size, edges));
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, std::span<const Sample> samples) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::ofstream images(dir / "images.txt");
  std::ofstream masks(dir / "masks.txt");
  if (!images || !masks) throw IoError("cannot write manifests in " + dir.string());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    write_png(dir / "images" / name, samples[i].image_gt);
    write_png(dir / "masks" / name, samples[i].mask);
    images << "images/" << name << '\n';
    masks << "masks/" << name << '\n';
  }
}

}  // namespace twinfill
