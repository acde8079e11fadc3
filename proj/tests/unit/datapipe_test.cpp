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

#include <fstream>
#include <set>

#include "support.hpp"
#include "twinfill/datapipe.hpp"
#include "twinfill/errors.hpp"
#include "twinfill/image_io.hpp"

using namespace twinfill;
using namespace twinfill::testing;

namespace {

torch::Tensor mask_with_holes(int64_t holes, int64_t total) {
  auto m = torch::ones({1, 1, total}, torch::kFloat32);
  m.narrow(2, 0, holes).zero_();
  return m;
}

}  // namespace

TEST_SUITE("datapipe") {
  TEST_CASE("grayscale uses BT.601 weights") {
    CHECK(bit_equal(to_grayscale(torch::ones({3, 2, 2}, torch::kDouble)).ge(1.0 - 1e-15),
                    torch::ones({1, 2, 2}, torch::kBool)));
    auto red = torch::zeros({3, 2, 2}, torch::kDouble);
    red[0].fill_(1.0);
    CHECK(max_abs_diff(to_grayscale(red), torch::full({1, 2, 2}, 0.299, torch::kDouble)) < 1e-15);

    const auto img = uniform({3, 4, 4}, 9);
    const auto gray = to_grayscale(img);
    const auto acc = img.accessor<double, 3>();
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        const double expect = 0.299 * acc[0][y][x] + 0.587 * acc[1][y][x] + 0.114 * acc[2][y][x];
        CHECK(gray[0][y][x].item<double>() == doctest::Approx(expect).epsilon(1e-14));
      }
    }
    CHECK_THROWS_AS(to_grayscale(torch::zeros({2, 4, 4})), InvalidInput);
  }

  TEST_CASE("edge extraction is binary and validates sigma") {
    const auto gray = uniform({1, 20, 20}, 2).to(torch::kFloat32);
    const auto edges = extract_edges(gray);
    CHECK(((edges == 0) | (edges == 1)).all().item<bool>());
    CHECK_THROWS_AS(extract_edges(gray, {0.0, 0.1, 0.2}), InvalidConfig);
    CHECK(extract_edges(torch::full({1, 16, 16}, 0.5)).sum().item<double>() == 0.0);
  }

  TEST_CASE("mask ratio buckets are half-open tens") {
    CHECK(classify_mask_ratio(torch::ones({1, 8, 8})) == MaskBucket(0, 10));
    CHECK(classify_mask_ratio(mask_with_holes(25, 100)) == MaskBucket(20, 30));
    CHECK(classify_mask_ratio(mask_with_holes(10, 100)) == MaskBucket(10, 20));
    CHECK(classify_mask_ratio(mask_with_holes(100, 100)) == MaskBucket(90, 100));
    // Every count maps to exactly the bucket containing its percentage.
    const int64_t total = 1000;
    for (int64_t holes = 0; holes <= total; ++holes) {
      const auto b = classify_mask_ratio(mask_with_holes(holes, total));
      const double pct = 100.0 * holes / total;
      CHECK(b.upper - b.lower == 10);
      CHECK(b.lower <= pct);
      if (b.upper < 100) CHECK(pct < b.upper);
    }
    CHECK_THROWS_AS(MaskBucket(5, 15), InvalidInput);
    CHECK(MaskBucket(30, 40).coarse() == MaskBucket(20, 40));
    CHECK(MaskBucket(20, 40).label() == "20-40%");
  }

  TEST_CASE("sample invariants") {
    const auto image = uniform({3, 16, 16}, 4).to(torch::kFloat32);
    const auto ones = Sample::from(image, torch::ones({1, 16, 16}));
    CHECK(bit_equal(ones.image_in, ones.image_gt));
    const auto zeros = Sample::from(image, torch::zeros({1, 16, 16}));
    CHECK(zeros.image_in.abs().sum().item<double>() == 0.0);
    const auto mask = random_mask({1, 16, 16}, 8, 0.3).to(torch::kFloat32);
    const auto s = Sample::from(image, mask);
    CHECK(bit_equal(s.image_in, s.image_gt * s.mask));
    CHECK(bit_equal(s.edge_in, s.edge_gt * s.mask));
    CHECK(bit_equal(s.gray_in, s.gray_gt * s.mask));
    CHECK(bit_equal(s.image_in * s.mask, s.image_in));
    s.validate();
    auto broken = s;
    broken.mask = broken.mask * 0.5;
    CHECK_THROWS_AS(broken.validate(), InvalidInput);
  }

  TEST_CASE("make_sample resizes and keeps masks binary") {
    TempDir dir("datapipe");
    const auto big = uniform({3, 512, 512}, 6).to(torch::kFloat32);
    write_png(dir / "big.png", big);
    const auto mask = random_mask({1, 512, 512}, 7, 0.3).to(torch::kFloat32);
    const auto s = make_sample(dir / "big.png", mask, 64);
    for (const auto* t : {&s.image_gt, &s.edge_gt, &s.gray_gt, &s.mask, &s.image_in}) {
      CHECK(t->size(1) == 64);
      CHECK(t->size(2) == 64);
    }
    CHECK(((s.mask == 0) | (s.mask == 1)).all().item<bool>());
    CHECK_THROWS(make_sample(dir / "big.png", torch::ones({1, 20, 20}), 0));
    CHECK_THROWS_AS(make_sample(dir / "missing.png", mask, 64), IoError);
  }

  TEST_CASE("synthetic data is deterministic and spans the buckets") {
    const auto a = synth_dataset(4, 32, 7);
    const auto b = synth_dataset(4, 32, 7);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(bit_equal(a[i].image_gt, b[i].image_gt));
      CHECK(bit_equal(a[i].mask, b[i].mask));
      CHECK(bit_equal(a[i].edge_gt, b[i].edge_gt));
      a[i].validate();
    }
    const SyntheticMaskSource source(3);
    std::set<int> lowers;
    for (std::size_t i = 0; i < 120; ++i) {
      const auto m = source.mask_for(i, 32, 32);
      const double hole = hole_percent(m);
      CHECK(hole > 0.0);
      CHECK(hole <= 60.0);
      lowers.insert(classify_mask_ratio(m).lower);
    }
    CHECK(lowers == std::set<int>{0, 10, 20, 30, 40, 50});
  }

  TEST_CASE("manifest and dataset writer round trip") {
    TempDir dir("manifest");
    const auto samples = synth_dataset(3, 16, 2);
    write_dataset(dir.path(), samples);
    const auto images = read_manifest(dir / "images.txt");
    const auto masks = read_manifest(dir / "masks.txt");
    REQUIRE(images.size() == 3);
    const auto loaded = load_dataset(images, MaskFileSource(masks), 0);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(bit_equal(loaded[i].image_gt, samples[i].image_gt));
      CHECK(bit_equal(loaded[i].mask, samples[i].mask));
    }
    std::ofstream(dir / "list.txt") << "# comment\n\nimages/00001.png\n";
    const auto listed = read_manifest(dir / "list.txt");
    REQUIRE(listed.size() == 1);
    CHECK(listed[0] == dir / "images/00001.png");
  }

  TEST_CASE("collate stacks samples") {
    const auto samples = synth_dataset(3, 16, 4);
    const auto batch = collate(samples);
    CHECK(batch.size() == 3);
    CHECK(batch.image_gt.sizes() == torch::IntArrayRef({3, 3, 16, 16}));
    const std::vector<std::size_t> idx = {2, 0};
    const auto picked = collate(samples, idx);
    CHECK(bit_equal(picked.mask[0], samples[2].mask));
    CHECK((picked.to(torch::kDouble).image_gt.scalar_type() == torch::kDouble));
  }
}
