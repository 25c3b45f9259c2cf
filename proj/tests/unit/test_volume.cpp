// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include "doctest.h"
#include "unit/oracles.hpp"
#include "voxinpaint/mesh.hpp"
#include "voxinpaint/vvol.hpp"

using namespace voxinpaint;

TEST_CASE("index layout is x-fastest with z selecting the slice") {
  const Dims d{};
  CHECK(d.index(1, 0, 0) == 1);
  CHECK(d.index(0, 1, 0) == 32);
  CHECK(d.index(0, 0, 1) == 1024);
  CHECK(d.count() == 32768);
}

TEST_CASE("apply_mask_removal") {
  VoxelGrid solid(Dims{}, 1);
  ColorVolume c(Dims{});
  for (std::size_t i = 0; i < solid.size(); ++i) c.set_rgb(i, {0.25F, 0.5F, 0.75F});

  SUBCASE("empty mask is identity") {
    auto [v, col] = apply_mask_removal(solid, c, DamageMask(Dims{}));
    CHECK(v == solid);
    CHECK(col == c);
  }
  SUBCASE("full mask clears everything") {
    auto [v, col] = apply_mask_removal(solid, c, DamageMask(Dims{}, 1));
    CHECK(v.count() == 0);
    for (float x : col.values()) CHECK(x == 0.0F);
  }
  SUBCASE("single voxel") {
    DamageMask m(Dims{});
    m.set(5, 5, 5, true);
    auto [v, col] = apply_mask_removal(solid, c, m);
    std::size_t bits = 0, zeros = 0;
    for (std::size_t i = 0; i < v.size(); ++i) bits += solid[i] != v[i];
    for (std::size_t k = 0; k < col.values().size(); ++k) zeros += col.values()[k] != c.values()[k];
    CHECK(bits == 1);
    CHECK(zeros == 3);
    CHECK_FALSE(v.at(5, 5, 5));
    CHECK(col.rgb(Dims{}.index(5, 5, 5)) == Rgb{0, 0, 0});
  }
  SUBCASE("projection") {
    const auto mb = oracle::random_bits(solid.size(), 0.3, 7);
    const auto m = oracle::from_bits<DamageMask>(mb, Dims{});
    auto once = apply_mask_removal(solid, c, m);
    auto twice = apply_mask_removal(once.first, once.second, m);
    CHECK(once.first == twice.first);
    CHECK(once.second == twice.second);
  }
}

TEST_CASE("sample invariants are checked") {
  Sample s;
  s.v_gt = VoxelGrid(Dims{}, 1);
  s.v_dam = s.v_gt;
  s.v_dam.set(1, 2, 3, false);
  s.mask = DamageMask(Dims{});
  s.c_gt = ColorVolume(Dims{});
  s.c_dam = ColorVolume(Dims{});
  CHECK_THROWS_AS(check_sample_invariants(s), std::invalid_argument);
  s.mask.set(1, 2, 3, true);
  CHECK_NOTHROW(check_sample_invariants(s));
}

TEST_CASE("VVOL1 round trip and header") {
  const Dims d{};
  auto g = oracle::from_bits<VoxelGrid>(oracle::random_bits(d.count(), 0.4, 3), d);
  ColorVolume c(d);
  Rng rng(9);
  for (std::size_t i = 0; i < d.count(); ++i)
    if (g[i]) c.set_rgb(i, {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())});

  std::stringstream gs;
  vvol::write(gs, g);
  const std::string text = gs.str();
  CHECK(text.rfind("VVOL1\ndims 32 32 32\nchannels 1\ndtype u8\nencoding raw-le\n\n", 0) == 0);
  CHECK(text.size() == 57 + d.count());
  CHECK(vvol::read_grid(gs) == g);

  std::stringstream cs;
  vvol::write(cs, c);
  CHECK(cs.str().find("channels 3\ndtype f32") != std::string::npos);
  CHECK(vvol::read_color(cs) == c);

  std::stringstream bad("VVOL1\ndims 32 32 32\nchannels 1\ndtype u8\nencoding raw-le\ncolor red\n\n");
  CHECK_THROWS_AS(vvol::read_grid(bad), std::runtime_error);
  std::stringstream wrong;
  vvol::write(wrong, g);
  CHECK_THROWS_AS(vvol::read_color(wrong), std::runtime_error);
  std::stringstream magic("VVOL2\n");
  CHECK_THROWS(vvol::read_header(magic));
}
