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

#include "support.hpp"
#include "twinfill/datapipe.hpp"
#include "twinfill/errors.hpp"
#include "twinfill/generator.hpp"

using namespace twinfill;
using namespace twinfill::testing;

namespace {

GeneratorConfig small_config(int64_t size = 32) {
  auto c = GeneratorConfig::for_size(size);
  c.base_channels = 8;
  c.max_channels = 32;
  c.feature_channels = 8;
  return c;
}

GeneratorInputs inputs_for(int64_t size, std::uint64_t seed, double hole = 0.3) {
  const auto image = uniform({1, 3, size, size}, seed).to(torch::kFloat32);
  const auto mask = random_mask({1, 1, size, size}, seed + 1, hole).to(torch::kFloat32);
  const auto gray = to_grayscale(image);
  const auto edge = (uniform({1, 1, size, size}, seed + 2) > 0.8).to(torch::kFloat32);
  return {image * mask, edge * mask, gray * mask, mask};
}

int64_t actual_parameters(InpaintGenerator& g) {
  int64_t n = 0;
  for (const auto& p : g->parameters()) n += p.numel();
  return n;
}

}  // namespace

TEST_SUITE("generator") {
  TEST_CASE("layer plan at 256") {
    const GeneratorConfig c;
    const std::vector<int64_t> widths = {64, 128, 256, 512, 512, 512, 512};
    for (int64_t l = 0; l < 7; ++l) CHECK(c.encoder_channels(l) == widths[l]);
    CHECK(GeneratorConfig::encoder_kernel(0) == 7);
    CHECK(GeneratorConfig::encoder_kernel(1) == 5);
    CHECK(GeneratorConfig::encoder_kernel(4) == 3);
    CHECK(GeneratorConfig::for_size(256).levels == 7);
    CHECK(GeneratorConfig::for_size(64).levels == 5);
    CHECK(GeneratorConfig::for_size(32).levels == 4);
    auto bad = c;
    bad.levels = 2;
    CHECK_THROWS_AS(bad.validate(), InvalidConfig);
    bad.levels = 9;
    CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  }

  TEST_CASE("analytic parameter count matches the built modules") {
    std::vector<GeneratorConfig> configs;
    configs.push_back(small_config());
    auto c = small_config();
    c.cross_borrow = false;
    configs.push_back(c);
    c = small_config();
    c.use_bigff = false;
    c.use_cfa = false;
    configs.push_back(c);
    c = small_config();
    c.multiscale_cfa = false;
    c.batch_norm = false;
    configs.push_back(c);
    c = small_config();
    c.two_stream = false;
    configs.push_back(c);
    for (const auto& cfg : configs) {
      InpaintGenerator g(cfg);
      CHECK(count_parameters(cfg) == actual_parameters(g));
    }
  }

  TEST_CASE("widened single stream matches the two-stream size within 2%") {
    for (int64_t size : {32, 64, 256}) {
      auto two = GeneratorConfig::for_size(size);
      auto one = two;
      one.two_stream = false;
      const double a = static_cast<double>(count_parameters(two));
      const double b = static_cast<double>(count_parameters(one));
      CHECK(std::abs(a - b) / a < 0.02);
      CHECK(one.resolved_width_scale() > 1.0);
    }
  }

  TEST_CASE("encoder masks and resolutions") {
    auto cfg = small_config(64);
    REQUIRE(cfg.levels == 5);
    InpaintGenerator g(cfg);
    g->eval();
    torch::NoGradGuard no_grad;
    auto in = inputs_for(64, 1, 0.0);
    in.mask = torch::ones_like(in.mask);
    const auto s = g->encode(in);
    REQUIRE(s.masks_per_level.size() == 5);
    for (const auto& m : s.masks_per_level) CHECK(m.min().item<float>() == 1.0f);
    CHECK(s.texture_skips.back().size(2) == 2);
    CHECK(s.texture_skips.back().size(3) == 2);
    CHECK_THROWS_AS(g->encode(inputs_for(48, 2)), InvalidInput);
  }

  TEST_CASE("zero encoder weights give zero features") {
    auto cfg = small_config();
    cfg.batch_norm = false;
    InpaintGenerator g(cfg);
    torch::NoGradGuard no_grad;
    for (auto* list : {&g->texture_encoder, &g->structure_encoder}) {
      for (auto& p : (*list)->parameters()) p.zero_();
    }
    const auto s = g->encode(inputs_for(32, 3));
    for (const auto& f : s.texture_skips) CHECK(f.abs().max().item<float>() == 0.0f);
    for (const auto& f : s.structure_skips) CHECK(f.abs().max().item<float>() == 0.0f);
  }

  TEST_CASE("full-size stream outputs are finite with the documented shapes") {
    auto cfg = GeneratorConfig::for_size(64);
    InpaintGenerator g(cfg);
    torch::NoGradGuard no_grad;
    const auto out = g->forward(inputs_for(64, 4));
    CHECK(out.features.texture_features.sizes() == torch::IntArrayRef({1, 64, 64, 64}));
    CHECK(out.features.structure_features.sizes() == torch::IntArrayRef({1, 64, 64, 64}));
    CHECK(torch::isfinite(out.image).all().item<bool>());
    CHECK(out.image.sizes() == torch::IntArrayRef({1, 3, 64, 64}));
    CHECK(out.edge.sizes() == torch::IntArrayRef({1, 1, 64, 64}));
    CHECK(out.fused.size(1) == 128);
  }

  TEST_CASE("ablation variants keep the output shapes") {
    for (int variant = 0; variant < 5; ++variant) {
      auto cfg = small_config();
      if (variant == 0) cfg.cross_borrow = false;
      if (variant == 1) cfg.use_bigff = false;
      if (variant == 2) cfg.use_cfa = false;
      if (variant == 3) cfg.multiscale_cfa = false;
      if (variant == 4) cfg.two_stream = false;
      InpaintGenerator g(cfg);
      torch::NoGradGuard no_grad;
      const auto out = g->forward(inputs_for(32, 5));
      CHECK(out.image.sizes() == torch::IntArrayRef({1, 3, 32, 32}));
      CHECK(out.features.texture_features.sizes() == out.features.structure_features.sizes());
    }
  }

  TEST_CASE("cross-stream borrowing couples texture output to the structure encoder") {
    for (bool borrow : {true, false}) {
      auto cfg = small_config();
      cfg.cross_borrow = borrow;
      InpaintGenerator g(cfg);
      auto out = g->forward(inputs_for(32, 6));
      std::vector<torch::Tensor> params = g->structure_encoder->parameters();
      const auto grads = torch::autograd::grad({out.features.texture_features.sum()}, params, {},
                                               false, false, true);
      double total = 0.0;
      for (const auto& gr : grads) {
        if (gr.defined()) total += gr.abs().sum().item<double>();
      }
      if (borrow) {
        CHECK(total > 0.0);
      } else {
        CHECK(total == 0.0);
      }
    }
  }

  TEST_CASE("projection heads") {
    auto cfg = small_config();
    InpaintGenerator g(cfg);
    torch::NoGradGuard no_grad;
    for (auto& p : g->texture_head->parameters()) p.zero_();
    for (auto& p : g->structure_head->parameters()) p.zero_();
    const auto zeros = torch::zeros({1, 8, 6, 6});
    const auto heads = g->project_heads(zeros, zeros);
    CHECK(max_abs_diff(heads.rgb_preview, torch::full({1, 3, 6, 6}, 0.5)) == 0.0);
    CHECK(heads.edge_logits.abs().max().item<float>() == 0.0f);
    CHECK(heads.edge_logits.sizes() == torch::IntArrayRef({1, 1, 6, 6}));
  }

  TEST_CASE("projection head gradients match finite differences") {
    torch::manual_seed(5);
    ProjectionHead rgb(4, 3);
    ProjectionHead edge(4, 1);
    rgb->to(torch::kDouble);
    edge->to(torch::kDouble);
    const auto f = uniform({1, 4, 4, 4}, 7, -1, 1);
    const auto a = gradcheck([&](const torch::Tensor& x) { return torch::sigmoid(rgb->forward(x)).square().sum(); },
                             f, 1e-4, 64);
    const auto b = gradcheck([&](const torch::Tensor& x) { return edge->forward(x).square().sum(); }, f,
                             1e-4, 64);
    CHECK(a.fraction() >= 0.95);
    CHECK(b.fraction() >= 0.95);
    CHECK(a.worst < 1e-2);
    CHECK(b.worst < 1e-2);
  }

  TEST_CASE("eval-mode generation is deterministic and in range") {
    InpaintGenerator g(small_config());
    const auto sample = synth_dataset(1, 32, 9)[0];
    const auto a = generate(g, sample);
    const auto b = generate(g, sample);
    CHECK(bit_equal(a.image, b.image));
    CHECK(bit_equal(a.edge, b.edge));
    CHECK(a.image.min().item<float>() >= 0.0f);
    CHECK(a.image.max().item<float>() <= 1.0f);
    CHECK(a.edge.min().item<float>() >= 0.0f);
    CHECK(a.edge.max().item<float>() <= 1.0f);
    CHECK(g->is_training());
  }

  TEST_CASE("compositing keeps known pixels") {
    const auto sample = synth_dataset(1, 16, 2)[0];
    const auto out = torch::rand({3, 16, 16});
    const auto comp = composite(out, sample);
    CHECK(bit_equal(comp * sample.mask, sample.image_in * sample.mask));
    CHECK(bit_equal(composite(out, sample.image_gt, torch::ones({1, 16, 16})), sample.image_gt));
    CHECK(bit_equal(composite(out, torch::zeros({3, 16, 16}), torch::zeros({1, 16, 16})), out));
  }

  TEST_CASE("frozen batch norm survives train()") {
    InpaintGenerator g(small_config());
    REQUIRE(!g->batch_norms().empty());
    g->freeze_batch_norm();
    g->train();
    for (const auto& bn : g->batch_norms()) {
      CHECK_FALSE(bn->is_training());
      for (const auto& p : bn->parameters()) CHECK_FALSE(p.requires_grad());
    }
    g->freeze_batch_norm(false);
    g->train();
    for (const auto& bn : g->batch_norms()) CHECK(bn->is_training());
  }
}
