// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "voxinpaint/morphology.hpp"
#include "voxinpaint/shapes.hpp"

namespace {

using voxinpaint::StructuringElement;

voxinpaint::VoxelGrid vase() {
  return voxinpaint::generate_procedural_shape(voxinpaint::ShapeKind::kVase, 7).occupancy;
}

StructuringElement element(const benchmark::State& state) {
  const int r = static_cast<int>(state.range(1));
  return state.range(0) == 0 ? StructuringElement::box(r) : StructuringElement::sphere(r);
}

void Erode(benchmark::State& state) {
  const auto g = vase();
  const auto se = element(state);
  for (auto _ : state) benchmark::DoNotOptimize(voxinpaint::erode(g, se));
}
BENCHMARK(Erode)->Args({0, 1})->Args({1, 1})->Args({1, 2})->Unit(benchmark::kMicrosecond);

void Close(benchmark::State& state) {
  const auto g = vase();
  const auto se = element(state);
  for (auto _ : state) benchmark::DoNotOptimize(voxinpaint::close(g, se));
}
BENCHMARK(Close)->Args({0, 1})->Args({1, 2})->Unit(benchmark::kMicrosecond);

}  // namespace
