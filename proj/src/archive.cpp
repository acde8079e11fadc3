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

#include "twinfill/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <openssl/evp.h>
#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian");

constexpr char kMagic[8] = {'T', 'W', 'F', 'A', 'R', 'C', 'H', '\0'};
constexpr std::size_t kDigestBytes = 32;
constexpr std::size_t kPreamble = sizeof(kMagic) + 4 + 4 + 8;

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    case torch::kUInt8: return "uint8";
    default: throw CheckpointError("archive: unsupported dtype");
  }
}

torch::ScalarType dtype_from(const std::string& name) {
  if (name == "float32") return torch::kFloat32;
  if (name == "float64") return torch::kFloat64;
  if (name == "int64") return torch::kInt64;
  if (name == "uint8") return torch::kUInt8;
  throw CheckpointError("archive: unknown dtype '" + name + "'");
}

std::array<std::uint8_t, kDigestBytes> sha256(std::span<const std::uint8_t> bytes) {
  std::array<std::uint8_t, kDigestBytes> out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != kDigestBytes) {
    throw Error("sha256 failed");
  }
  return out;
}

void append(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
  const std::size_t at = out.size();
  out.resize(at + n);
  if (n > 0) std::memcpy(out.data() + at, data, n);
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  append(out, &value, sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

const torch::Tensor* TensorArchive::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

void TensorArchive::add(std::string name, const torch::Tensor& tensor) {
  dtype_name(tensor.scalar_type());
  if (find(name) != nullptr) throw CheckpointError("archive: duplicate tensor '" + name + "'");
  tensors.push_back({std::move(name), tensor.detach().to(torch::kCPU).contiguous()});
}

std::vector<std::uint8_t> serialize_archive(const TensorArchive& archive) {
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  std::vector<torch::Tensor> dense;
  dense.reserve(archive.tensors.size());
  for (const auto& [name, tensor] : archive.tensors) {
    auto t = tensor.detach().to(torch::kCPU).contiguous();
    const std::uint64_t nbytes = t.numel() * t.element_size();
    index.push_back({{"name", name},
                     {"dtype", dtype_name(t.scalar_type())},
                     {"shape", t.sizes().vec()},
                     {"offset", offset},
                     {"bytes", nbytes}});
    offset += nbytes;
    dense.push_back(std::move(t));
  }
  nlohmann::json header = {{"meta", archive.meta}, {"tensors", index}};
  const std::string header_text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreamble + header_text.size() + offset + kDigestBytes);
  append(out, kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kArchiveVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, header_text.size());
  append(out, header_text.data(), header_text.size());
  for (const auto& t : dense) {
    append(out, t.data_ptr(), t.numel() * t.element_size());
  }
  const auto digest = sha256(out);
  append(out, digest.data(), digest.size());
  return out;
}

TensorArchive parse_archive(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreamble + kDigestBytes ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("archive: bad magic or truncated file");
  }
  const auto version = get<std::uint32_t>(bytes, 8);
  if (version != kArchiveVersion) {
    throw CheckpointError("archive: version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(kArchiveVersion) + ")");
  }
  const auto body = bytes.first(bytes.size() - kDigestBytes);
  const auto digest = sha256(body);
  if (std::memcmp(digest.data(), bytes.data() + body.size(), kDigestBytes) != 0) {
    throw CheckpointError("archive: digest mismatch (file corrupt)");
  }
  const auto header_len = get<std::uint64_t>(bytes, 16);
  if (header_len > body.size() - kPreamble) throw CheckpointError("archive: header overruns file");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(body.begin() + kPreamble,
                                   body.begin() + kPreamble + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("archive: bad header: ") + e.what());
  }

  const std::size_t data_start = kPreamble + header_len;
  const std::size_t data_size = body.size() - data_start;
  TensorArchive archive;
  try {
    archive.meta = header.at("meta");
    for (const auto& entry : header.at("tensors")) {
      const auto dtype = dtype_from(entry.at("dtype").get<std::string>());
      const auto shape = entry.at("shape").get<std::vector<int64_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto nbytes = entry.at("bytes").get<std::uint64_t>();
      int64_t numel = 1;
      for (int64_t d : shape) {
        if (d < 0) throw CheckpointError("archive: negative dimension");
        numel *= d;
      }
      if (nbytes != static_cast<std::uint64_t>(numel) * torch::elementSize(dtype) ||
          offset > data_size || nbytes > data_size - offset) {
        throw CheckpointError("archive: tensor '" + entry.at("name").get<std::string>() +
                              "' has inconsistent extent");
      }
      auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
      if (nbytes > 0) std::memcpy(t.data_ptr(), bytes.data() + data_start + offset, nbytes);
      archive.tensors.push_back({entry.at("name").get<std::string>(), std::move(t)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("archive: malformed index: ") + e.what());
  }
  return archive;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  const auto bytes = serialize_archive(archive);
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TensorArchive read_archive(const std::filesystem::path& path) {
  return parse_archive(read_file_bytes(path));
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : sha256(bytes)) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 15]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) {
  return sha256_hex(read_file_bytes(path));
}

}  // namespace twinfill
