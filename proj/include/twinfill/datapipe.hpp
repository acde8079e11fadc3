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

#ifndef TWINFILL_DATAPIPE_HPP_
#define TWINFILL_DATAPIPE_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <torch/types.h>

#include "twinfill/kernels.hpp"

namespace twinfill {

using EdgeParams = kernels::CannyParams;

// Hole-ratio bucket, half-open [lower, upper) in percent: width 10 from
// classification, width 20 after coarse().
struct MaskBucket {
  int lower = 0;
  int upper = 10;

  MaskBucket() = default;
  MaskBucket(int lower_percent, int upper_percent);

  // The 20-point bin used by evaluation tables (0-20, 20-40, ...).
  MaskBucket coarse() const;
  std::string label() const;  // e.g. "20-40%"

  friend bool operator==(const MaskBucket&, const MaskBucket&) = default;
  friend auto operator<=>(const MaskBucket&, const MaskBucket&) = default;
};

// One training/eval example. Every field is (C,H,W) float32; the corrupted
// variants are exact elementwise products with the mask (1 = known).
struct Sample {
  torch::Tensor image_gt;  // (3,H,W) in [0,1]
  torch::Tensor edge_gt;   // (1,H,W) in {0,1}
  torch::Tensor gray_gt;   // (1,H,W) in [0,1]
  torch::Tensor mask;      // (1,H,W) in {0,1}
  torch::Tensor image_in;
  torch::Tensor edge_in;
  torch::Tensor gray_in;

  // Derives grayscale, edges and the corrupted variants.
  static Sample from(const torch::Tensor& image, const torch::Tensor& mask,
                     const EdgeParams& edges = {});

  int64_t height() const { return image_gt.size(1); }
  int64_t width() const { return image_gt.size(2); }

  // Throws InvalidInput when an invariant does not hold.
  void validate() const;
};

// Samples stacked along a leading batch dimension.
struct Batch {
  torch::Tensor image_gt, edge_gt, gray_gt, mask, image_in, edge_in, gray_in;

  int64_t size() const { return image_gt.size(0); }
  Batch to(torch::Dtype dtype) const;
};

Batch collate(std::span<const Sample> samples);
Batch collate(std::span<const Sample> samples, std::span<const std::size_t> indices);

// BT.601 luma. Accepts (3,H,W) or (B,3,H,W); differentiable.
torch::Tensor to_grayscale(const torch::Tensor& image);

// Canny on a (1,H,W) gray map, returns a {0,1} float map of the same shape.
torch::Tensor extract_edges(const torch::Tensor& gray, const EdgeParams& params = {});

// Hole percentage 100 * mean(1 - mask), computed from exact pixel counts.
double hole_percent(const torch::Tensor& mask);
MaskBucket classify_mask_ratio(const torch::Tensor& mask);

// Source of masks by dataset index; deterministic per index.
class MaskSource {
 public:
  virtual ~MaskSource() = default;
  virtual torch::Tensor mask_for(std::size_t index, int height, int width) const = 0;
};

// Random rectangles plus free-form brush strokes with hole ratio in (0, 60%].
class SyntheticMaskSource : public MaskSource {
 public:
  explicit SyntheticMaskSource(std::uint64_t seed) : seed_(seed) {}
  torch::Tensor mask_for(std::size_t index, int height, int width) const override;

 private:
  std::uint64_t seed_;
};

// Irregular-mask PNGs from a directory (sorted by name) or a manifest file.
class MaskFileSource : public MaskSource {
 public:
  explicit MaskFileSource(std::vector<std::filesystem::path> files);
  static MaskFileSource from_directory(const std::filesystem::path& dir);

  torch::Tensor mask_for(std::size_t index, int height, int width) const override;
  std::size_t size() const { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
};

torch::Tensor synth_mask(int height, int width, std::uint64_t seed);
torch::Tensor synth_texture(int size, std::uint64_t seed);

// Procedural stripe/checker/gradient textures with synthetic holes.
// Bit-identical for a fixed seed; pixel values sit on the 8-bit grid so the
// samples survive a PNG round trip unchanged.
std::vector<Sample> synth_dataset(int n, int size, std::uint64_t seed,
                                  const EdgeParams& edges = {});

// Reads, resizes (bilinear image, nearest mask) and derives a Sample. With
// target_size <= 0 no resize happens and sizes must already agree.
Sample make_sample(const std::filesystem::path& image_path, const torch::Tensor& mask,
                   int target_size, const EdgeParams& edges = {});
Sample make_sample(const std::filesystem::path& image_path, const MaskSource& masks,
                   std::size_t index, int target_size, const EdgeParams& edges = {});

// Newline-delimited paths; blank lines and '#' comments skipped, relative
// paths resolved against the manifest's directory.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);

std::vector<Sample> load_dataset(std::span<const std::filesystem::path> images,
                                 const MaskSource& masks, int target_size,
                                 const EdgeParams& edges = {});

// Writes images/, masks/ and the two manifests for a synthetic set.
void write_dataset(const std::filesystem::path& dir, std::span<const Sample> samples);

}  // namespace twinfill

#endif  // TWINFILL_DATAPIPE_HPP_
