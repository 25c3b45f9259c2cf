// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "unit/oracles.hpp"
#include "voxinpaint/damage.hpp"
#include "voxinpaint/morphology.hpp"
#include "voxinpaint/shapes.hpp"

using namespace voxinpaint;

namespace {

ColorVolume flat_color(const VoxelGrid& g) {
  ColorVolume c(g.dims());
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i]) c.set_rgb(i, {0.9F, 0.8F, 0.7F});
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  DamageConfig c;
  CHECK_NOTHROW(c.validate());
  c.holes_per_slice_min = 4;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = DamageConfig{};
  c.hole_radius_max = 16;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = DamageConfig{};
  c.erosion_radius = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("circle stencils") {
  const auto s = sample_hole_region(HoleShape::kCircle, 16, 16, 5, 0);
  std::size_t lattice = 0;
  for (int dy = -5; dy <= 5; ++dy)
    for (int dx = -5; dx <= 5; ++dx) lattice += dx * dx + dy * dy <= 25;
  CHECK(lattice == 81);
  CHECK(s.count() == 81);

  const auto clipped = sample_hole_region(HoleShape::kCircle, -3, 10, 5, 0);
  std::size_t expected = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) expected += (x + 3) * (x + 3) + (y - 10) * (y - 10) <= 25;
  CHECK(clipped.count() == expected);
  CHECK(clipped.values.size() == 1024);
}

TEST_CASE("polygon stencils stay inside the enlarged disk") {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double cx = rng.uniform(0, 32), cy = rng.uniform(0, 32), r = rng.uniform(5, 10);
    const auto s = sample_hole_region(HoleShape::kPolygon, cx, cy, r, seed);
    CHECK(s.count() > 0);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if (s.at(x, y)) REQUIRE(std::hypot(x - cx, y - cy) <= r + 1);
  }
}

TEST_CASE("compute_mask") {
  const Dims d{};
  const auto gt = oracle::random_bits(d.count(), 0.6, 1);
  const auto r = oracle::random_bits(d.count(), 0.5, 2);
  std::vector<std::uint8_t> dam(gt.size()), expected(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    dam[i] = gt[i] & r[i];
    expected[i] = gt[i] & !r[i];
  }
  const auto vg = oracle::from_bits<VoxelGrid>(gt, d);
  const auto vd = oracle::from_bits<VoxelGrid>(dam, d);
  CHECK(oracle::bits(compute_mask(vg, vd)) == expected);
  CHECK(compute_mask(vg, vg).empty());
  CHECK(as_grid(compute_mask(vg, VoxelGrid(d))) == vg);
  CHECK_THROWS_AS(compute_mask(vd, vg), std::invalid_argument);
}

TEST_CASE("no-op configuration leaves the object intact") {
  const auto shape = generate_procedural_shape(ShapeKind::kVase, 3);
  DamageConfig cfg;
  cfg.holes_enabled = false;
  cfg.erosion_radius = 0;
  const auto s = synth_damage(shape.occupancy, shape.color, cfg, "vase");
  CHECK(s.v_dam == shape.occupancy);
  CHECK(s.mask.empty());
  CHECK(s.c_dam == shape.color);
}

TEST_CASE("erosion only removes the boundary shell") {
  const Dims d{};
  const VoxelGrid solid(d, 1);
  DamageConfig cfg;
  cfg.holes_enabled = false;
  const auto s = synth_damage(solid, flat_color(solid), cfg, "solid");
  const auto eroded = oracle::erode(oracle::bits(solid), d, oracle::ball(2));
  std::vector<std::uint8_t> shell(d.count());
  for (std::size_t i = 0; i < shell.size(); ++i) shell[i] = !eroded[i];
  CHECK(oracle::bits(s.mask) == shell);
  CHECK(oracle::bits(s.v_dam) == eroded);
}

TEST_CASE("generated samples satisfy the algebra and are deterministic") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto kind = static_cast<ShapeKind>(seed % 3);
    const auto shape = generate_procedural_shape(kind, seed);
    DamageConfig cfg;
    cfg.seed = seed * 31 + 7;
    DamageTrace trace;
    const auto s = synth_damage(shape.occupancy, shape.color, cfg, "item", &trace);
    CHECK_NOTHROW(check_sample_invariants(s));
    CHECK(is_subset(s.v_dam, s.v_gt));
    for (std::size_t i = 0; i < s.v_gt.size(); ++i) {
      REQUIRE((s.mask[i] || s.v_dam[i]) == s.v_gt[i]);
      REQUIRE(!(s.mask[i] && s.v_dam[i]));
    }
    CHECK(color_supported_by(s.c_dam, s.v_dam));
    CHECK_FALSE(s.degenerate);
    CHECK(trace.holes.size() >= 32);
    CHECK(trace.holes.size() <= 96);

    const auto again = synth_damage(shape.occupancy, shape.color, cfg, "item");
    CHECK(again.v_dam == s.v_dam);
    CHECK(again.c_dam == s.c_dam);
    CHECK(again.mask == s.mask);
  }
}

TEST_CASE("hole radii follow the configured uniform range") {
  const auto shape = generate_procedural_shape(ShapeKind::kSphere, 1);
  DamageConfig cfg;
  cfg.erosion_radius = 0;
  double sum = 0;
  std::size_t n = 0;
  int per_count[4] = {0, 0, 0, 0};
  for (std::uint64_t seed = 0; n < 10000; ++seed) {
    cfg.seed = seed;
    DamageTrace trace;
    synth_damage(shape.occupancy, shape.color, cfg, "r", &trace);
    std::vector<int> per_slice(32, 0);
    for (const auto& h : trace.holes) {
      REQUIRE(h.radius >= 5.0);
      REQUIRE(h.radius <= 10.0);
      sum += h.radius;
      ++n;
      ++per_slice[h.slice];
    }
    for (int k : per_slice) ++per_count[k];
  }
  const double sigma = 5.0 / std::sqrt(12.0) / std::sqrt(double(n));
  CHECK(std::abs(sum / n - 7.5) < 3 * sigma);
  CHECK(per_count[0] == 0);
  CHECK(per_count[1] > 0);
  CHECK(per_count[3] > 0);
}

TEST_CASE("degenerate inputs are flagged") {
  const Dims d{};
  VoxelGrid tiny(d);
  tiny.set(3, 3, 3, true);
  DamageConfig cfg;
  const auto s = synth_damage(tiny, flat_color(tiny), cfg, "tiny");
  CHECK(s.degenerate);
  CHECK(s.v_dam.empty());
}
