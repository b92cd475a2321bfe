// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Optimized kernels against their serial reference versions.

#include <benchmark/benchmark.h>

#include "nccnet/convnet.hpp"
#include "nccnet/ncc.hpp"
#include "nccnet/random.hpp"
#include "nccnet/trainer.hpp"

using namespace nccnet;

namespace {

Raster noise(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Raster r(w, h);
  for (float& v : r.pixels()) v = static_cast<float>(uniform01(rng));
  return r;
}

void BM_NccDirect(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
  const Raster tmpl = noise(t, t, 1), src = noise(s, s, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ncc_direct(tmpl, src));
}

void BM_NccFft(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
  const Raster tmpl = noise(t, t, 1), src = noise(s, s, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ncc_fft(tmpl, src));
}

Tensor<float> random_tensor(int c, int h, int w) {
  Rng rng(3);
  Tensor<float> x(c, h, w);
  for (float& v : x.data) v = static_cast<float>(uniform(rng, -1, 1));
  return x;
}

void BM_ConvReference(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1));
  const Tensor<float> x = random_tensor(c, n, n);
  const std::vector<float> w(static_cast<std::size_t>(c) * c * 9, 0.01f), b(c, 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(layers::conv3x3_reference<float>(x, w, b, c));
}

void BM_ConvGemm(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1));
  const Tensor<float> x = random_tensor(c, n, n);
  const std::vector<float> w(static_cast<std::size_t>(c) * c * 9, 0.01f), b(c, 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(layers::conv3x3<float>(x, w, b, c));
}

void BM_PairGradient(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
  const NetParams<float> p = init_params(NetConfig{});
  const Raster tmpl = noise(t, t, 4), src = noise(s, s, 5);
  std::vector<float> g(p.size());
  for (auto _ : state)
    benchmark::DoNotOptimize(pair_gradient<float>(p, tmpl, src, PairObjective::kSimilar, 6, g));
}

}  // namespace

BENCHMARK(BM_NccDirect)->Args({16, 64})->Args({32, 96})->Args({160, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NccFft)->Args({16, 64})->Args({32, 96})->Args({160, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvReference)->Args({8, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvGemm)->Args({8, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairGradient)->Args({32, 96})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
