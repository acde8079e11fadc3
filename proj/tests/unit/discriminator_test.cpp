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
#include "twinfill/discriminator.hpp"

using namespace twinfill;
using namespace twinfill::testing;

namespace {

double true_sigma(const torch::Tensor& w) {
  return torch::linalg_svdvals(w.reshape({w.size(0), -1}).to(torch::kDouble))[0].item<double>();
}

// Input rows [lo, hi] that influence output row `o` of the texture branch.
std::pair<int64_t, int64_t> receptive_rows(int64_t o) {
  const int64_t strides[] = {2, 2, 2, 1, 1};
  int64_t lo = o, hi = o;
  for (int l = 4; l >= 0; --l) {
    lo = lo * strides[l] - 1;
    hi = hi * strides[l] - 1 + 3;
  }
  return {lo, hi};
}

}  // namespace

TEST_SUITE("discriminator") {
  TEST_CASE("64x64 input gives a 2x6x6 score map in (0,1)") {
    Discriminator d;
    d->eval();
    torch::NoGradGuard no_grad;
    const auto image = torch::rand({2, 3, 64, 64});
    const auto edge = (torch::rand({2, 1, 64, 64}) > 0.8).to(torch::kFloat32);
    const auto gray = torch::rand({2, 1, 64, 64});
    const auto s = d->forward(image, edge, gray);
    CHECK(s.sizes() == torch::IntArrayRef({2, 2, 6, 6}));
    CHECK((s > 0).all().item<bool>());
    CHECK((s < 1).all().item<bool>());
    CHECK(bit_equal(s, d->forward(image, edge, gray)));
    CHECK(d->spectral_layers().size() == 13);
  }

  TEST_CASE("spectral norm of simple matrices") {
    auto diag = torch::zeros({2, 2}, torch::kDouble);
    diag[0][0] = 3.0;
    diag[1][1] = 1.0;
    auto u = torch::tensor({0.6, 0.8}, torch::kDouble);
    auto v = torch::zeros({2}, torch::kDouble);
    CHECK(spectral_sigma(diag, u, v, 50).item<double>() == doctest::Approx(3.0).epsilon(1e-12));
    const auto normalized = spectral_normalize(diag, u, v, 1);
    CHECK(true_sigma(normalized) == doctest::Approx(1.0).epsilon(1e-12));
    auto eye = torch::eye(3, torch::kDouble);
    auto u3 = torch::tensor({1.0, 0.0, 0.0}, torch::kDouble);
    auto v3 = torch::zeros({3}, torch::kDouble);
    CHECK(max_abs_diff(spectral_normalize(eye, u3, v3, 1), eye) < 1e-15);
  }

  TEST_CASE("power iteration converges to the SVD value") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto w = uniform({8, 8}, seed, -1, 1);
      auto u = uniform({8}, seed + 100, 0.1, 1.0);
      u /= u.norm();
      auto v = torch::zeros({8}, torch::kDouble);
      const double est = spectral_sigma(w, u, v, 50).item<double>();
      CHECK(std::abs(est - true_sigma(w)) / true_sigma(w) < 1e-2);
    }
  }

  TEST_CASE("converged layers have spectral norm at most 1.02") {
    torch::manual_seed(1);
    Discriminator d(DiscriminatorConfig{8, 8});
    for (auto& layer : d->spectral_layers()) {
      torch::NoGradGuard no_grad;
      spectral_sigma(layer->weight, layer->u, layer->v, 100);
      layer->eval();
      CHECK(true_sigma(layer->normalized_weight()) <= 1.02);
    }
  }

  TEST_CASE("training forwards advance the power iteration, eval forwards do not") {
    Discriminator d(DiscriminatorConfig{8, 8});
    const auto x = torch::rand({1, 3, 32, 32});
    const auto e = torch::rand({1, 1, 32, 32});
    const auto u0 = d->spectral_layers()[0]->u.clone();
    d->eval();
    d->forward(x, e, e);
    CHECK(bit_equal(d->spectral_layers()[0]->u, u0));
    d->train();
    d->forward(x, e, e);
    CHECK_FALSE(bit_equal(d->spectral_layers()[0]->u, u0));
  }

  TEST_CASE("scores are patch-local") {
    Discriminator d(DiscriminatorConfig{8, 8});
    d->eval();
    torch::NoGradGuard no_grad;
    auto image = torch::rand({1, 3, 64, 64});
    const auto edge = torch::zeros({1, 1, 64, 64});
    const auto gray = torch::rand({1, 1, 64, 64});
    const auto before = d->forward(image, edge, gray);
    image[0][0][0][0] += 0.5;
    const auto after = d->forward(image, edge, gray);
    CHECK(bit_equal(before[0][1], after[0][1]));  // structure branch untouched
    int changed = 0;
    for (int64_t i = 0; i < 6; ++i) {
      for (int64_t j = 0; j < 6; ++j) {
        const bool covers = receptive_rows(i).first <= 0 && receptive_rows(j).first <= 0;
        const bool same = before[0][0][i][j].item<float>() == after[0][0][i][j].item<float>();
        if (!covers) CHECK(same);
        if (!same) ++changed;
      }
    }
    CHECK(changed > 0);
  }
}
