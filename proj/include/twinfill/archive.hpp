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

#ifndef TWINFILL_ARCHIVE_HPP_
#define TWINFILL_ARCHIVE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/types.h>

namespace twinfill {

// Binary named-tensor archive used for checkpoints and extractor weights.
//
//   "TWFARCH\0" | u32 version | u32 0 | u64 header bytes | header JSON |
//   raw tensor bytes in index order | SHA-256 of everything before it
//
// The header holds the caller's `meta` object and a tensor index (name,
// dtype, shape, byte offset, byte count). Integers are little-endian.
// Supported dtypes: float32, float64, int64, uint8.
inline constexpr std::uint32_t kArchiveVersion = 1;

struct NamedTensor {
  std::string name;
  torch::Tensor tensor;
};

struct TensorArchive {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const torch::Tensor* find(const std::string& name) const;
  void add(std::string name, const torch::Tensor& tensor);
};

std::vector<std::uint8_t> serialize_archive(const TensorArchive& archive);

// Verifies magic, version and digest before building anything. Throws
// CheckpointError on any defect.
TensorArchive parse_archive(std::span<const std::uint8_t> bytes);

// Written to a temporary sibling, then renamed over `path`.
void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace twinfill

#endif  // TWINFILL_ARCHIVE_HPP_
