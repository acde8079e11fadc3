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

#ifndef TWINFILL_IMAGE_IO_HPP_
#define TWINFILL_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/types.h>

namespace twinfill {

// Images live in memory as float32 (C,H,W) tensors in [0,1], RGB order.
// Masks are (1,H,W) with 1 = known pixel. On disk a mask is an 8-bit gray
// PNG with 255 = known, binarized at 128 when read back.

torch::Tensor read_image(const std::filesystem::path& path);
torch::Tensor read_mask(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const torch::Tensor& image);

torch::Tensor decode_image(std::span<const std::uint8_t> bytes);
torch::Tensor decode_mask(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const torch::Tensor& image);

// 8-bit conversions. Mats are CV_8UC3 (RGB order) or CV_8UC1.
cv::Mat to_mat8(const torch::Tensor& image);
torch::Tensor from_mat8(const cv::Mat& mat);
cv::Mat binarize_mask8(const cv::Mat& gray);
cv::Mat decode_mat8(std::span<const std::uint8_t> bytes, bool grayscale);
std::vector<std::uint8_t> encode_png_mat(const cv::Mat& mat);

// Bilinear for images, nearest for masks.
torch::Tensor resize_image(const torch::Tensor& image, int height, int width);
torch::Tensor resize_mask(const torch::Tensor& mask, int height, int width);

}  // namespace twinfill

#endif  // TWINFILL_IMAGE_IO_HPP_
