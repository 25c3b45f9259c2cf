// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "voxinpaint/metrics.hpp"
#include "voxinpaint/shapes.hpp"

namespace {

using voxinpaint::ShapeKind;

void Chamfer(benchmark::State& state) {
  const auto a = voxinpaint::generate_procedural_shape(ShapeKind::kVase, 1).occupancy;
  const auto b = voxinpaint::generate_procedural_shape(ShapeKind::kSphere, 2).occupancy;
  for (auto _ : state) benchmark::DoNotOptimize(voxinpaint::chamfer(a, b));
}
BENCHMARK(Chamfer)->Unit(benchmark::kMillisecond);

void Fscore(benchmark::State& state) {
  const auto a = voxinpaint::generate_procedural_shape(ShapeKind::kBoxWithPattern, 1).occupancy;
  const auto b = voxinpaint::generate_procedural_shape(ShapeKind::kBoxWithPattern, 2).occupancy;
  for (auto _ : state) benchmark::DoNotOptimize(voxinpaint::fscore_1mm(a, b));
}
BENCHMARK(Fscore)->Unit(benchmark::kMillisecond);

void SymmetryBaseline(benchmark::State& state) {
  const auto s = voxinpaint::generate_procedural_shape(ShapeKind::kVase, 3);
  voxinpaint::DamageMask mask(s.occupancy.dims());
  for (std::size_t i = 0; i < mask.size(); i += 5) mask.set(i, s.occupancy[i]);
  auto v = s.occupancy;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) v.set(i, false);
  for (auto _ : state) benchmark::DoNotOptimize(voxinpaint::symmetry_baseline(v, s.color, mask));
}
BENCHMARK(SymmetryBaseline)->Unit(benchmark::kMillisecond);

}  // namespace
