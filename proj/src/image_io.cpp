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

#include "twinfill/image_io.hpp"

#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "twinfill/errors.hpp"

namespace twinfill {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_image_tensor(const torch::Tensor& image) {
  if (image.dim() != 3 || (image.size(0) != 1 && image.size(0) != 3)) {
    throw InvalidInput("expected a (1,H,W) or (3,H,W) image tensor");
  }
}

}  // namespace

cv::Mat to_mat8(const torch::Tensor& image) {
  check_image_tensor(image);
  const int channels = static_cast<int>(image.size(0));
  auto hwc = image.detach()
                 .to(torch::kCPU, torch::kFloat64)
                 .clamp(0.0, 1.0)
                 .mul(255.0)
                 .round()
                 .to(torch::kUInt8)
                 .permute({1, 2, 0})
                 .contiguous();
  cv::Mat mat(static_cast<int>(image.size(1)), static_cast<int>(image.size(2)),
              channels == 3 ? CV_8UC3 : CV_8UC1);
  std::memcpy(mat.data, hwc.data_ptr<std::uint8_t>(), hwc.numel());
  return mat;
}

torch::Tensor from_mat8(const cv::Mat& mat) {
  if (mat.depth() != CV_8U || (mat.channels() != 1 && mat.channels() != 3)) {
    throw InvalidInput("expected an 8-bit 1- or 3-channel image");
  }
  cv::Mat dense = mat.isContinuous() ? mat : mat.clone();
  auto hwc = torch::from_blob(dense.data, {dense.rows, dense.cols, dense.channels()},
                              torch::kUInt8)
                 .clone();
  return hwc.permute({2, 0, 1}).contiguous().to(torch::kFloat32).div_(255.0);
}

cv::Mat binarize_mask8(const cv::Mat& gray) {
  cv::Mat out;
  cv::threshold(gray, out, 127, 255, cv::THRESH_BINARY);
  return out;
}

cv::Mat decode_mat8(std::span<const std::uint8_t> bytes, bool grayscale) {
  if (bytes.empty()) throw IoError("empty image payload");
  cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
              const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(raw, grayscale ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw IoError(std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty()) throw IoError("image decode failed");
  if (!grayscale) cv::cvtColor(decoded, decoded, cv::COLOR_BGR2RGB);
  return decoded;
}

std::vector<std::uint8_t> encode_png_mat(const cv::Mat& mat) {
  cv::Mat bgr = mat;
  if (mat.channels() == 3) cv::cvtColor(mat, bgr, cv::COLOR_RGB2BGR);
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out)) throw IoError("PNG encode failed");
  return out;
}

torch::Tensor decode_image(std::span<const std::uint8_t> bytes) {
  return from_mat8(decode_mat8(bytes, false));
}

torch::Tensor decode_mask(std::span<const std::uint8_t> bytes) {
  return from_mat8(binarize_mask8(decode_mat8(bytes, true)));
}

torch::Tensor read_image(const std::filesystem::path& path) {
  auto bytes = read_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const IoError&) {
    throw IoError("cannot decode image " + path.string());
  }
}

torch::Tensor read_mask(const std::filesystem::path& path) {
  auto bytes = read_bytes(path);
  try {
    return decode_mask(bytes);
  } catch (const IoError&) {
    throw IoError("cannot decode mask " + path.string());
  }
}

std::vector<std::uint8_t> encode_png(const torch::Tensor& image) {
  return encode_png_mat(to_mat8(image));
}

void write_png(const std::filesystem::path& path, const torch::Tensor& image) {
  auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

torch::Tensor resize_image(const torch::Tensor& image, int height, int width) {
  check_image_tensor(image);
  if (image.size(1) == height && image.size(2) == width) return image.clone();
  auto hwc = image.detach().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  const int channels = static_cast<int>(image.size(0));
  cv::Mat src(static_cast<int>(image.size(1)), static_cast<int>(image.size(2)),
              CV_32FC(channels), hwc.data_ptr<float>());
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  auto out = torch::from_blob(dst.data, {height, width, channels}, torch::kFloat32)
                 .clone()
                 .permute({2, 0, 1})
                 .contiguous();
  return out.clamp_(0.0, 1.0);
}

torch::Tensor resize_mask(const torch::Tensor& mask, int height, int width) {
  check_image_tensor(mask);
  if (mask.size(1) == height && mask.size(2) == width) return mask.clone();
  auto plane = mask.detach().to(torch::kFloat32).squeeze(0).contiguous();
  cv::Mat src(static_cast<int>(mask.size(1)), static_cast<int>(mask.size(2)), CV_32FC1,
              plane.data_ptr<float>());
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_NEAREST);
  return torch::from_blob(dst.data, {1, height, width}, torch::kFloat32).clone();
}

}  // namespace twinfill
