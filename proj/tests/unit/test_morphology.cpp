// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "unit/oracles.hpp"
#include "voxinpaint/morphology.hpp"

using namespace voxinpaint;

TEST_CASE("structuring elements") {
  CHECK(StructuringElement::box(1).offsets.size() == 27);
  CHECK(StructuringElement::sphere(1).offsets.size() == 7);
  CHECK(StructuringElement::sphere(2).offsets.size() == 33);
  CHECK(StructuringElement::sphere(2).offsets.size() == oracle::ball(2).size());
  for (const auto& se : {StructuringElement::box(2), StructuringElement::sphere(3)}) {
    bool origin = false;
    for (const auto& o : se.offsets) origin = origin || o == std::array<int, 3>{0, 0, 0};
    CHECK(origin);
  }
}

TEST_CASE("erosion of a solid lattice removes a two-voxel shell") {
  const Dims d{};
  const auto e = erode(VoxelGrid(d, 1), StructuringElement::sphere(2));
  for (int z = 0; z < 32; ++z)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const int m = std::min({x, y, z, 31 - x, 31 - y, 31 - z});
        REQUIRE(e.at(x, y, z) == (m >= 2));
      }
  CHECK(e.count() == 28 * 28 * 28);
}

TEST_CASE("trivial cases") {
  const Dims d{};
  const auto box = StructuringElement::box(1);
  CHECK(erode(VoxelGrid(d), box).empty());
  CHECK(dilate(VoxelGrid(d), box).empty());
  CHECK(close(VoxelGrid(d), box).empty());
  VoxelGrid one(d);
  one.set(16, 16, 16, true);
  CHECK(erode(one, StructuringElement::sphere(1)).empty());
  CHECK(dilate(one, box).count() == 27);
  CHECK(close(one, box) == one);
}

TEST_CASE("closing fills a single interior gap") {
  const Dims d{};
  VoxelGrid g(d, 1);
  g.set(10, 11, 12, false);
  CHECK(close(g, StructuringElement::box(1)) == VoxelGrid(d, 1));
}

TEST_CASE("oracle parity on random 8^3 grids") {
  const Dims d{8, 8, 8};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const double p = rng.uniform(0.2, 0.8);
    const auto b = oracle::random_bits(d.count(), p, seed + 1000);
    const auto g = oracle::from_bits<VoxelGrid>(b, d);
    const int r = 1 + static_cast<int>(seed % 2);
    const auto se = seed % 3 == 0 ? StructuringElement::box(r) : StructuringElement::sphere(r);
    const auto off = seed % 3 == 0 ? oracle::box(r) : oracle::ball(r);
    REQUIRE(oracle::bits(erode(g, se)) == oracle::erode(b, d, off));
    REQUIRE(oracle::bits(dilate(g, se)) == oracle::dilate(b, d, off));
    REQUIRE(oracle::bits(close(g, se)) == oracle::close(b, d, off, r));
  }
}

TEST_CASE("properties over random grids") {
  const Dims d{12, 12, 12};
  const auto box = StructuringElement::box(1);
  const auto ball = StructuringElement::sphere(2);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto b = oracle::random_bits(d.count(), 0.5, seed);
    const auto g = oracle::from_bits<VoxelGrid>(b, d);
    auto bigger = b;
    const auto extra = oracle::random_bits(d.count(), 0.2, seed + 77);
    for (std::size_t i = 0; i < b.size(); ++i) bigger[i] |= extra[i];
    const auto h = oracle::from_bits<VoxelGrid>(bigger, d);

    CHECK(is_subset(g, close(g, box)));
    CHECK(is_subset(g, close(g, ball)));
    CHECK(is_subset(erode(g, ball), g));
    CHECK(is_subset(erode(g, ball), erode(h, ball)));
    CHECK(is_subset(dilate(g, box), dilate(h, box)));
    CHECK(close(close(g, box), box) == close(g, box));

    // Duality holds away from the lattice faces.
    const auto lhs = dilate(g, ball);
    const auto rhs = complement(erode(complement(g), ball.reflected()));
    for (int z = 2; z < 10; ++z)
      for (int y = 2; y < 10; ++y)
        for (int x = 2; x < 10; ++x) REQUIRE(lhs.at(x, y, z) == rhs.at(x, y, z));
  }
}
