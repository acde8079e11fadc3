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

#ifndef TWINFILL_INFERENCE_HPP_
#define TWINFILL_INFERENCE_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "twinfill/config.hpp"
#include "twinfill/generator.hpp"

namespace twinfill {

// Read-only generator plus the facts reported alongside its outputs.
struct ModelBundle {
  mutable InpaintGenerator generator{nullptr};  // eval mode, never trained
  RunConfig config;
  std::string checkpoint_sha256;
  std::string model_version;
  int64_t iteration = 0;

  static std::shared_ptr<const ModelBundle> load(const std::filesystem::path& checkpoint);
};

struct InpaintResult {
  cv::Mat composite;   // CV_8UC3 RGB, original resolution
  cv::Mat raw_output;  // CV_8UC3 RGB, I_out resized to the original resolution
  cv::Mat edge;        // CV_8UC1 in {0,255}
  double mask_ratio_percent = 0.0;
  int model_size = 0;

  nlohmann::json metadata(const ModelBundle& bundle) const;
};

// `image` is CV_8UC3 RGB, `mask` CV_8UC1 with 255 = known (re-binarized at
// 128). The network runs at `target_size` (0: training size) and its output
// is resized back; known pixels of the composite are the input bytes.
InpaintResult inpaint(const ModelBundle& bundle, const cv::Mat& image, const cv::Mat& mask,
                      int64_t target_size = 0);

}  // namespace twinfill

#endif  // TWINFILL_INFERENCE_HPP_
