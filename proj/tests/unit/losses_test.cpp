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

#include <cmath>

#include "support.hpp"
#include "twinfill/archive.hpp"
#include "twinfill/errors.hpp"
#include "twinfill/losses.hpp"

using namespace twinfill;
using namespace twinfill::testing;

namespace {

double loop_l1(const torch::Tensor& a, const torch::Tensor& b) {
  const auto x = a.to(torch::kDouble).contiguous().flatten();
  const auto y = b.to(torch::kDouble).contiguous().flatten();
  const auto* p = x.data_ptr<double>();
  const auto* q = y.data_ptr<double>();
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += std::abs(p[i] - q[i]);
  return s / static_cast<double>(x.numel());
}

torch::Tensor loop_gram(const torch::Tensor& f) {
  const auto x = f.to(torch::kDouble).contiguous();
  const int64_t b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  auto g = torch::zeros({b, c, c}, torch::kDouble);
  auto acc = x.accessor<double, 4>();
  auto out = g.accessor<double, 3>();
  for (int64_t n = 0; n < b; ++n) {
    for (int64_t i = 0; i < c; ++i) {
      for (int64_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (int64_t y = 0; y < h; ++y) {
          for (int64_t z = 0; z < w; ++z) s += acc[n][i][y][z] * acc[n][j][y][z];
        }
        out[n][i][j] = s / static_cast<double>(c * h * w);
      }
    }
  }
  return g;
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("default weights and their validation") {
    const LossWeights w;
    CHECK(w.rec == 10.0);
    CHECK(w.perc == 0.1);
    CHECK(w.style == 250.0);
    CHECK(w.adv == 0.1);
    CHECK(w.inter == 1.0);
    auto bad = w;
    bad.style = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  }

  TEST_CASE("joint loss of unit terms is the weight sum") {
    const LossWeights w;
    CHECK(joint_loss({1, 1, 1, 1, 1}, w) == doctest::Approx(261.2).epsilon(1e-12));
    const auto one = torch::ones({}, torch::kDouble);
    CHECK(joint_loss(LossTerms{one, one, one, one, one}, w).item<double>() ==
          doctest::Approx(261.2).epsilon(1e-12));
    CHECK(joint_loss({0.5, 2.0, 0.01, 3.0, 0.25}, w) ==
          doctest::Approx(5.0 + 0.2 + 2.5 + 0.3 + 0.25).epsilon(1e-12));
  }

  TEST_CASE("reconstruction loss matches a scalar loop") {
    const auto a = uniform({2, 3, 5, 7}, 1);
    const auto b = uniform({2, 3, 5, 7}, 2);
    CHECK(reconstruction_loss(a, b).item<double>() == doctest::Approx(loop_l1(a, b)).epsilon(1e-12));
    CHECK(reconstruction_loss(a, a).item<double>() == 0.0);
    CHECK_THROWS_AS(reconstruction_loss(a, uniform({2, 3, 5, 6}, 3)), InvalidInput);
  }

  TEST_CASE("gram matrix matches a scalar loop") {
    const auto f = uniform({2, 4, 3, 5}, 4, -1, 1);
    CHECK(max_abs_diff(gram_matrix(f), loop_gram(f)) < 1e-14);
    const auto ones = torch::ones({1, 2, 2, 2}, torch::kDouble);
    CHECK(max_abs_diff(gram_matrix(ones), torch::full({1, 2, 2}, 0.5, torch::kDouble)) < 1e-15);
    CHECK_THROWS_AS(gram_matrix(torch::ones({2, 2})), InvalidInput);
  }

  TEST_CASE("random extractor is seeded, frozen and handles 4x4 inputs") {
    const RandomFeatureExtractor a(2021);
    const RandomFeatureExtractor b(2021);
    const RandomFeatureExtractor c(7);
    const auto wa = a.weights();
    const auto wb = b.weights();
    REQUIRE(wa.size() == 6);
    for (std::size_t i = 0; i < wa.size(); ++i) {
      CHECK(bit_equal(wa[i], wb[i]));
      CHECK_FALSE(wa[i].requires_grad());
    }
    CHECK_FALSE(bit_equal(wa[0], c.weights()[0]));
    const auto feats = a.features(uniform({1, 3, 4, 4}, 5));
    REQUIRE(feats.size() == 3);
    CHECK(feats[0].sizes() == torch::IntArrayRef({1, 16, 2, 2}));
    CHECK(feats[1].sizes() == torch::IntArrayRef({1, 32, 1, 1}));
    CHECK(feats[2].sizes() == torch::IntArrayRef({1, 64, 1, 1}));
  }

  TEST_CASE("perceptual and style losses match loops over the extracted features") {
    const RandomFeatureExtractor ex(2021);
    const auto a = uniform({2, 3, 8, 8}, 6);
    const auto b = uniform({2, 3, 8, 8}, 7);
    const auto fa = ex.features(a);
    const auto fb = ex.features(b);
    double perc = 0.0, style = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      perc += loop_l1(fa[i], fb[i]);
      style += loop_l1(loop_gram(fa[i]), loop_gram(fb[i]));
    }
    CHECK(perceptual_loss(a, b, ex).item<double>() == doctest::Approx(perc).epsilon(1e-10));
    CHECK(style_loss(a, b, ex).item<double>() == doctest::Approx(style).epsilon(1e-10));
    CHECK(perceptual_loss(a, a, ex).item<double>() == 0.0);
    CHECK(style_loss(a, a, ex).item<double>() == 0.0);
  }

  TEST_CASE("adversarial terms on worked values") {
    const auto real = torch::full({1, 2, 3, 3}, 0.8, torch::kDouble);
    const auto fake = torch::full({1, 2, 3, 3}, 0.2, torch::kDouble);
    CHECK(discriminator_loss(real, fake).item<double>() ==
          doctest::Approx(-2.0 * std::log(0.8)).epsilon(1e-12));
    CHECK(generator_adversarial_loss(fake).item<double>() ==
          doctest::Approx(-std::log(0.2)).epsilon(1e-12));
    const auto zero = torch::zeros({1, 2, 3, 3}, torch::kDouble);
    const auto one = torch::ones({1, 2, 3, 3}, torch::kDouble);
    CHECK(discriminator_loss(zero, one).item<double>() ==
          doctest::Approx(-2.0 * std::log(kLogClamp)).epsilon(1e-12));
    CHECK(std::isfinite(generator_adversarial_loss(zero).item<double>()));
  }

  TEST_CASE("intermediate loss on worked values") {
    HeadOutputs heads{torch::full({1, 3, 2, 2}, 0.5, torch::kDouble),
                      torch::zeros({1, 1, 2, 2}, torch::kDouble)};
    const auto edge = torch::ones({1, 1, 2, 2}, torch::kDouble);
    CHECK(intermediate_loss(heads, edge, heads.rgb_preview).item<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    const auto image = torch::full({1, 3, 2, 2}, 0.75, torch::kDouble);
    CHECK(intermediate_loss(heads, edge, image).item<double>() ==
          doctest::Approx(std::log(2.0) + 0.25).epsilon(1e-12));
  }

  TEST_CASE("loss gradients match central differences") {
    const RandomFeatureExtractor ex(2021);
    const auto x = uniform({1, 3, 4, 4}, 11);
    const auto y = uniform({1, 3, 4, 4}, 12);
    const auto edge = (uniform({1, 1, 4, 4}, 13) > 0.5).to(torch::kDouble);
    std::vector<std::pair<const char*, std::function<torch::Tensor(const torch::Tensor&)>>> terms = {
        {"rec", [&](const torch::Tensor& t) { return reconstruction_loss(t, y); }},
        {"perc", [&](const torch::Tensor& t) { return perceptual_loss(t, y, ex); }},
        {"style", [&](const torch::Tensor& t) { return style_loss(t, y, ex); }},
        {"adv", [&](const torch::Tensor& t) { return generator_adversarial_loss(torch::sigmoid(t)); }},
        {"inter",
         [&](const torch::Tensor& t) {
           return intermediate_loss(HeadOutputs{t, t.narrow(1, 0, 1) - 0.5}, edge, y);
         }},
    };
    for (const auto& [name, f] : terms) {
      CAPTURE(name);
      const auto report = gradcheck(f, x, 1e-4);
      CHECK(report.probed == 48);
      CHECK(report.fraction() == 1.0);
    }
  }

  TEST_CASE("discriminator loss does not reach the generator") {
    torch::manual_seed(3);
    Discriminator d(DiscriminatorConfig{8, 8});
    const auto real = DiscriminatorInputs{torch::rand({1, 3, 32, 32}), torch::rand({1, 1, 32, 32}),
                                          torch::rand({1, 1, 32, 32})};
    auto fake_image = torch::rand({1, 3, 32, 32}).requires_grad_(true);
    const auto fake = DiscriminatorInputs{fake_image, torch::rand({1, 1, 32, 32}),
                                          torch::rand({1, 1, 32, 32})};
    auto losses = adversarial_losses(d, real, fake);
    losses.discriminator.backward();
    CHECK_FALSE(fake_image.grad().defined());
    CHECK(d->parameters()[0].grad().defined());
    losses.generator.backward();
    CHECK(fake_image.grad().defined());
    CHECK(fake_image.grad().abs().sum().item<double>() > 0.0);
  }

  TEST_CASE("vgg archive loading") {
    TempDir dir("vgg");
    TensorArchive ar;
    int64_t in = 3;
    const std::array<int64_t, 3> widths = {64, 128, 256};
    for (std::size_t s = 0; s < 3; ++s) {
      for (const char* name : Vgg16FeatureExtractor::layer_names()[s]) {
        ar.add(std::string(name) + ".weight", torch::randn({widths[s], in, 3, 3}) * 0.05);
        ar.add(std::string(name) + ".bias", torch::zeros({widths[s]}));
        in = widths[s];
      }
    }
    write_archive(dir.path() / "vgg.twf", ar);
    const auto ex = make_feature_extractor(dir.path() / "vgg.twf", 0);
    const auto feats = ex->features(torch::rand({1, 3, 16, 16}));
    REQUIRE(feats.size() == 3);
    CHECK(feats[0].sizes() == torch::IntArrayRef({1, 64, 8, 8}));
    CHECK(feats[1].sizes() == torch::IntArrayRef({1, 128, 4, 4}));
    CHECK(feats[2].sizes() == torch::IntArrayRef({1, 256, 2, 2}));
    ar.tensors.pop_back();
    write_archive(dir.path() / "short.twf", ar);
    CHECK_THROWS_AS(Vgg16FeatureExtractor(dir.path() / "short.twf"), CheckpointError);
    CHECK_THROWS_AS(make_feature_extractor(dir.path() / "missing.twf", 0), IoError);
  }
}
