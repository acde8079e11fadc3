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

#include "test_doctest.hpp"

#include <opencv2/imgproc.hpp>

#include "support.hpp"
#include "twinfill/errors.hpp"
#include "twinfill/image_io.hpp"

using namespace twinfill;
using namespace twinfill::testing;

TEST_SUITE("image_io") {
  TEST_CASE("png round trip is exact on the 8-bit grid") {
    const auto image = (uniform({3, 9, 7}, 11) * 255.0).round().div(255.0).to(torch::kFloat32);
    const auto back = decode_image(encode_png(image));
    CHECK(bit_equal(back, image));
  }

  TEST_CASE("masks binarize at 128") {
    cv::Mat gray(1, 4, CV_8UC1);
    gray.at<std::uint8_t>(0, 0) = 0;
    gray.at<std::uint8_t>(0, 1) = 127;
    gray.at<std::uint8_t>(0, 2) = 128;
    gray.at<std::uint8_t>(0, 3) = 255;
    const auto mask = decode_mask(encode_png_mat(gray));
    REQUIRE(mask.sizes() == torch::IntArrayRef({1, 1, 4}));
    CHECK(mask[0][0][0].item<float>() == 0.0f);
    CHECK(mask[0][0][1].item<float>() == 0.0f);
    CHECK(mask[0][0][2].item<float>() == 1.0f);
    CHECK(mask[0][0][3].item<float>() == 1.0f);
  }

  TEST_CASE("editor mask format re-binarizes losslessly") {
    const auto mask = random_mask({1, 1, 16, 20}, 3, 0.4)[0].to(torch::kFloat32);
    const auto png = encode_png(mask);
    const auto mat = decode_mat8(png, true);
    CHECK(mat.type() == CV_8UC1);
    double lo = 0, hi = 0;
    cv::minMaxLoc(mat, &lo, &hi);
    CHECK(lo == 0.0);
    CHECK(hi == 255.0);
    CHECK(bit_equal(decode_mask(png), mask));
  }

  TEST_CASE("garbage bytes fail to decode") {
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
    CHECK_THROWS_AS(decode_image(junk), IoError);
    CHECK_THROWS_AS(read_image("/nonexistent/file.png"), IoError);
  }

  TEST_CASE("nearest resize keeps masks binary") {
    const auto mask = random_mask({1, 1, 37, 23}, 5, 0.5)[0].to(torch::kFloat32);
    const auto small = resize_mask(mask, 8, 8);
    CHECK(small.sizes() == torch::IntArrayRef({1, 8, 8}));
    CHECK(((small == 0) | (small == 1)).all().item<bool>());
  }
}
