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

// Serial reference kernels against the OpenMP and tensor paths.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include "twinfill/cfa.hpp"
#include "twinfill/kernels.hpp"
#include "twinfill/pconv.hpp"
#include "twinfill/reference.hpp"

namespace {

using namespace twinfill;

std::vector<double> plane(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n) * n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_CannyReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto img = plane(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::canny(img, n, n, 2.0, 0.1, 0.2));
}

void BM_CannyParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto img = plane(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::canny(img, n, n, {}));
}

void BM_SsimReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = plane(n, 2);
  const auto b = plane(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(reference::ssim(a, b, n, n));
}

void BM_SsimParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = plane(n, 2);
  const auto b = plane(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::ssim(a, b, n, n));
}

struct PconvInputs {
  torch::Tensor x, m, w, b;
  PartialConvSpec spec{8, 8, 3, 1, 1, 1, true};

  explicit PconvInputs(int64_t n) {
    torch::manual_seed(4);
    x = torch::rand({1, 8, n, n}, torch::kDouble);
    m = (torch::rand({1, 1, n, n}, torch::kDouble) > 0.3).to(torch::kDouble);
    w = torch::rand({8, 8, 3, 3}, torch::kDouble);
    b = torch::rand({8}, torch::kDouble);
  }
};

void BM_PconvReference(benchmark::State& state) {
  const PconvInputs in(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::partial_conv(in.x, in.m, in.w, in.b, 1, 1, 1));
}

void BM_PconvTensor(benchmark::State& state) {
  const PconvInputs in(state.range(0));
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(partial_conv(in.x, in.m, in.w, in.b, in.spec));
}

void BM_AttentionReference(benchmark::State& state) {
  torch::manual_seed(5);
  const auto f = torch::rand({8, state.range(0), state.range(0)}, torch::kDouble);
  for (auto _ : state) {
    const auto s = reference::attention_scores(f, kCosineEps);
    benchmark::DoNotOptimize(reference::reconstruct(f, s));
  }
}

void BM_AttentionTensor(benchmark::State& state) {
  torch::manual_seed(5);
  const auto f = torch::rand({1, 8, state.range(0), state.range(0)}, torch::kDouble);
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct(f, attention_scores(f)));
}

}  // namespace

BENCHMARK(BM_CannyReference)->Arg(64)->Arg(256);
BENCHMARK(BM_CannyParallel)->Arg(64)->Arg(256);
BENCHMARK(BM_SsimReference)->Arg(64)->Arg(256);
BENCHMARK(BM_SsimParallel)->Arg(64)->Arg(256);
BENCHMARK(BM_PconvReference)->Arg(16)->Arg(32);
BENCHMARK(BM_PconvTensor)->Arg(16)->Arg(32);
BENCHMARK(BM_AttentionReference)->Arg(8)->Arg(16);
BENCHMARK(BM_AttentionTensor)->Arg(8)->Arg(16);

BENCHMARK_MAIN();
