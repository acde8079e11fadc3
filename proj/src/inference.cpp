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

#include "twinfill/inference.hpp"

#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "twinfill/archive.hpp"
#include "twinfill/datapipe.hpp"
#include "twinfill/errors.hpp"
#include "twinfill/image_io.hpp"
#include "twinfill/trainer.hpp"
#include "twinfill/version.hpp"

namespace twinfill {

std::shared_ptr<const ModelBundle> ModelBundle::load(const std::filesystem::path& checkpoint) {
  if (!std::filesystem::exists(checkpoint)) {
    throw CheckpointError("checkpoint not found: " + checkpoint.string());
  }
  const auto bytes = read_file_bytes(checkpoint);
  const auto archive = parse_archive(bytes);
  auto bundle = std::make_shared<ModelBundle>();
  bundle->generator = load_generator(archive, &bundle->config);
  bundle->checkpoint_sha256 = sha256_hex(bytes);
  bundle->iteration = archive.meta.value("iteration", int64_t{0});
  bundle->model_version = std::string("twinfill-") + kVersion + "+it" +
                          std::to_string(bundle->iteration);
  return bundle;
}

nlohmann::json InpaintResult::metadata(const ModelBundle& bundle) const {
  return {{"mask_ratio_percent", mask_ratio_percent},
          {"width", composite.cols},
          {"height", composite.rows},
          {"model_size", model_size},
          {"model_version", bundle.model_version},
          {"checkpoint_sha256", bundle.checkpoint_sha256}};
}

InpaintResult inpaint(const ModelBundle& bundle, const cv::Mat& image, const cv::Mat& mask,
                      int64_t target_size) {
  if (image.type() != CV_8UC3) throw InvalidInput("image must be 8-bit RGB");
  if (mask.type() != CV_8UC1) throw InvalidInput("mask must be 8-bit gray");
  if (image.size() != mask.size()) {
    throw InvalidInput("image is " + std::to_string(image.cols) + "x" + std::to_string(image.rows) +
                       " but mask is " + std::to_string(mask.cols) + "x" +
                       std::to_string(mask.rows));
  }
  const auto& model = bundle.config.model;
  const int64_t size = target_size > 0 ? target_size : model.image_size;
  const int64_t stride = int64_t{1} << model.levels;
  if (size < stride || size % stride != 0) {
    throw InvalidInput("target_size must be a positive multiple of " + std::to_string(stride));
  }

  const cv::Mat known = binarize_mask8(mask);
  const auto image_t = from_mat8(image);
  const auto mask_t = from_mat8(known);
  const int s = static_cast<int>(size);
  const auto sample = Sample::from(resize_image(image_t, s, s), resize_mask(mask_t, s, s),
                                   bundle.config.data.edge_params());

  Generated out;
  {
    torch::NoGradGuard no_grad;
    auto in = GeneratorInputs::from(sample);
    auto result = bundle.generator->forward(in);
    out = {result.image.squeeze(0), result.edge.squeeze(0)};
  }

  InpaintResult r;
  r.model_size = s;
  r.mask_ratio_percent = hole_percent(mask_t);
  r.raw_output = to_mat8(resize_image(out.image, image.rows, image.cols));
  r.composite = r.raw_output.clone();
  image.copyTo(r.composite, known);
  const cv::Mat edge_small = to_mat8((out.edge >= 0.5).to(torch::kFloat32));
  cv::resize(edge_small, r.edge, image.size(), 0, 0, cv::INTER_NEAREST);
  return r;
}

}  // namespace twinfill
