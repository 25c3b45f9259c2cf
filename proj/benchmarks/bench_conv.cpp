// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "voxinpaint/nn/layers.hpp"

namespace nn = voxinpaint::nn;

namespace {

nn::Array<float> random_array(nn::Shape shape, std::uint64_t seed) {
  voxinpaint::Rng rng(seed);
  nn::Array<float> a(std::move(shape));
  for (float& v : a.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return a;
}

void Conv3dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  nn::ParameterStore<float> store;
  voxinpaint::Rng rng(1);
  auto conv = nn::Conv<float>::make(store, "c", 3, c, c, 3, rng);
  auto x = nn::constant(random_array({1, c, n, n, n}, 2));
  for (auto _ : state) {
    auto y = conv(x);
    benchmark::DoNotOptimize(y.value().data.data());
  }
  state.counters["MAC/s"] = benchmark::Counter(
      static_cast<double>(c) * c * 27 * n * n * n, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(Conv3dForward)->Args({8, 32})->Args({16, 32})->Args({32, 16})->Unit(benchmark::kMillisecond);

void Conv3dForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  nn::ParameterStore<float> store;
  voxinpaint::Rng rng(1);
  auto conv = nn::Conv<float>::make(store, "c", 3, c, c, 3, rng);
  auto x = nn::parameter(random_array({1, c, n, n, n}, 2));
  for (auto _ : state) {
    auto loss = nn::sum(conv(x));
    nn::backward(loss);
    store.zero_grad();
    x.zero_grad();
  }
}
BENCHMARK(Conv3dForwardBackward)->Args({8, 32})->Args({16, 32})->Unit(benchmark::kMillisecond);

void Conv2dSliceBatch(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  nn::ParameterStore<float> store;
  voxinpaint::Rng rng(1);
  auto conv = nn::Conv<float>::make(store, "c", 2, c, c, 3, rng);
  auto x = nn::constant(random_array({8, c, 32, 32}, 2));
  for (auto _ : state) {
    auto y = conv(x);
    benchmark::DoNotOptimize(y.value().data.data());
  }
}
BENCHMARK(Conv2dSliceBatch)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
