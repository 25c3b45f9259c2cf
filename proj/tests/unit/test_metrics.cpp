// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "unit/oracles.hpp"
#include "voxinpaint/metrics.hpp"

using namespace voxinpaint;

namespace {

VoxelGrid box(const Dims& d, int x0, int x1, int y0, int y1, int z0, int z1) {
  VoxelGrid g(d);
  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) g.set(d.index(x, y, z), true);
  return g;
}

VoxelGrid shifted_x(const VoxelGrid& g, int s) {
  const Dims d = g.dims();
  VoxelGrid out(d);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (g.at(x, y, z) && x + s < d.nx) out.set(d.index(x + s, y, z), true);
  return out;
}

VoxelGrid single(const Dims& d, int x, int y, int z) {
  VoxelGrid g(d);
  g.set(d.index(x, y, z), true);
  return g;
}

}  // namespace

TEST_CASE("chamfer fixtures") {
  const Dims d{};
  const VoxelGrid a = box(d, 4, 20, 6, 9, 3, 30);
  CHECK(chamfer(a, a) == 0.0);
  CHECK(chamfer(single(d, 0, 0, 0), single(d, 1, 0, 0)) == 2.0);
  CHECK(chamfer(single(d, 0, 0, 0), single(d, 3, 4, 0)) == 10.0);
  CHECK_THROWS_AS((void)chamfer(a, VoxelGrid(d)), std::invalid_argument);
  CHECK_THROWS_AS((void)chamfer(VoxelGrid(d), a), std::invalid_argument);
  CHECK_THROWS_AS((void)chamfer(a, VoxelGrid(Dims{8, 8, 8})), std::invalid_argument);
}

TEST_CASE("chamfer and F-score agree with brute force") {
  const Dims d{9, 7, 8};
  int checked = 0;
  for (std::uint64_t s = 0; checked < 200; ++s) {
    const double p = 0.01 + 0.3 * static_cast<double>(s % 10) / 10.0;
    const auto ab = oracle::random_bits(d.count(), p, 2 * s + 1), bb = oracle::random_bits(d.count(), p, 2 * s + 2);
    const auto a = oracle::from_bits<VoxelGrid>(ab, d), b = oracle::from_bits<VoxelGrid>(bb, d);
    if (a.empty() || b.empty()) continue;
    const auto pa = oracle::points(ab, d), pb = oracle::points(bb, d);
    const double c = chamfer(a, b);
    CHECK(std::abs(c - oracle::chamfer(pa, pb)) < 1e-9);
    CHECK(std::abs(c - chamfer(b, a)) < 1e-12);
    for (double tau : {1.0, 1.5, 2.0}) {
      const GeomReport r = fscore_at(a, b, tau);
      const oracle::Fscore o = oracle::fscore(pa, pb, tau);
      CHECK(std::abs(r.precision - o.precision) < 1e-12);
      CHECK(std::abs(r.recall - o.recall) < 1e-12);
      CHECK(std::abs(r.fscore - o.f) < 1e-12);
      CHECK(std::abs(r.chamfer_mm - c) < 1e-9);
    }
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("nearest index on a large sparse lattice") {
  const Dims d{};
  const auto ab = oracle::random_bits(d.count(), 0.002, 11);
  const auto a = oracle::from_bits<VoxelGrid>(ab, d);
  const auto pts = oracle::points(ab, d);
  const NearestIndex idx(a);
  Rng rng(3);
  for (int k = 0; k < 300; ++k) {
    const int x = static_cast<int>(rng.uniform_int(0, 31)), y = static_cast<int>(rng.uniform_int(0, 31)),
              z = static_cast<int>(rng.uniform_int(0, 31));
    CHECK(idx.distance(x, y, z) == doctest::Approx(oracle::nearest({double(x), double(y), double(z)}, pts)).epsilon(1e-12));
  }
  CHECK(NearestIndex(VoxelGrid(d)).empty());
  CHECK_THROWS_AS((void)NearestIndex(VoxelGrid(d)).distance(0, 0, 0), std::logic_error);
}

TEST_CASE("F-score under shifts") {
  const Dims d{};
  const VoxelGrid gt = box(d, 6, 20, 8, 14, 10, 18);
  const GeomReport one = fscore_1mm(shifted_x(gt, 1), gt);
  CHECK(one.precision == 1.0);
  CHECK(one.recall == 1.0);
  CHECK(one.fscore == 1.0);

  const VoxelGrid pred = shifted_x(gt, 2);
  const GeomReport two = fscore_1mm(pred, gt);
  const auto o = oracle::fscore(oracle::points(oracle::bits(pred), d), oracle::points(oracle::bits(gt), d), 1.0);
  CHECK(two.precision == doctest::Approx(o.precision).epsilon(1e-12));
  CHECK(two.recall == doctest::Approx(o.recall).epsilon(1e-12));
  CHECK(two.fscore == doctest::Approx(o.f).epsilon(1e-12));
  // One of the fifteen x-columns falls outside the 1 mm band on each side.
  CHECK(two.precision == doctest::Approx(14.0 / 15.0));
  CHECK(two.recall == doctest::Approx(14.0 / 15.0));

  const GeomReport same = fscore_1mm(gt, gt);
  CHECK(same.fscore == 1.0);
  CHECK(same.chamfer_mm == 0.0);
}

TEST_CASE("F-score degenerate sets") {
  const Dims d{};
  const VoxelGrid gt = box(d, 1, 3, 1, 3, 1, 3);
  const GeomReport no_gt = fscore_1mm(gt, VoxelGrid(d));
  CHECK_FALSE(no_gt.defined);
  CHECK_FALSE(no_gt.diagnostic.empty());
  const GeomReport no_pred = fscore_1mm(VoxelGrid(d), gt);
  CHECK(no_pred.defined);
  CHECK(no_pred.fscore == 0.0);
  CHECK(no_pred.recall == 0.0);
  CHECK(std::isnan(no_pred.chamfer_mm));
}

TEST_CASE("PSNR") {
  CHECK(std::abs(psnr_from_mse(0.00198) - 27.03) <= 0.01);
  CHECK(std::abs(psnr_from_mse(0.00345) - 24.62) <= 0.01);
  CHECK(psnr_from_mse(0.0) == 99.0);
  CHECK(psnr_from_mse(1.0) == 0.0);
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const double mse = rng.uniform(1e-6, 1.0);
    CHECK(std::abs(psnr_from_mse(mse) - 10 * std::log10(1 / mse)) < 1e-6);
  }
  CHECK_THROWS_AS((void)psnr_from_mse(-1e-3), std::invalid_argument);
  CHECK_THROWS_AS((void)psnr_from_mse(std::nan("")), std::invalid_argument);
}

TEST_CASE("masked color metrics") {
  const Dims d{};
  const VoxelGrid gt = box(d, 4, 12, 4, 12, 2, 9);
  ColorVolume cg(d), ch(d);
  Rng rng(9);
  for (std::size_t i = 0; i < d.count(); ++i)
    for (int c = 0; c < 3; ++c) {
      cg.at(c, i) = static_cast<float>(rng.uniform());
      ch.at(c, i) = static_cast<float>(rng.uniform());
    }

  const ColorReport same = masked_color_metrics(gt, cg, gt, cg);
  CHECK(same.defined);
  CHECK(same.masked_mse == 0.0);
  CHECK(same.psnr_db == 99.0);

  const VoxelGrid pred = box(d, 6, 14, 4, 12, 4, 11);
  const ColorReport r = masked_color_metrics(pred, ch, gt, cg);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (!pred[i] || !gt[i]) continue;
    for (int c = 0; c < 3; ++c) sum += std::pow(double(ch.at(c, i)) - double(cg.at(c, i)), 2);
    ++n;
  }
  REQUIRE(r.defined);
  CHECK(r.overlap_count == n);
  CHECK(r.masked_mse == doctest::Approx(sum / (3.0 * n)).epsilon(1e-12));
  CHECK(r.psnr_db == doctest::Approx(10 * std::log10(3.0 * n / sum)).epsilon(1e-12));
  REQUIRE(r.per_slice_psnr.size() == 32);
  for (int z = 0; z < 32; ++z) CHECK(std::isnan(r.per_slice_psnr[z]) == (z < 4 || z > 9));
  CHECK(std::isfinite(r.per_slice_psnr[5]));

  const ColorReport none = masked_color_metrics(box(d, 20, 25, 20, 25, 20, 25), ch, gt, cg);
  CHECK_FALSE(none.defined);
  CHECK_FALSE(none.diagnostic.empty());
  CHECK(std::isnan(none.psnr_db));
  CHECK(none.overlap_count == 0);
}

namespace {

// Color that depends on (y, z) only, so an x-mirror leaves it unchanged.
ColorVolume x_symmetric_color(const Dims& d) {
  ColorVolume c(d);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        for (int ch = 0; ch < 3; ++ch) c.at(ch, d.index(x, y, z)) = static_cast<float>((y * 7 + z * 3 + ch) % 17) / 16.0F;
  return c;
}

}  // namespace

TEST_CASE("symmetry baseline restores an x-symmetric object") {
  const Dims d{};
  const VoxelGrid gt = box(d, 8, 23, 5, 20, 4, 27);
  ColorVolume cg = x_symmetric_color(d);
  restrict_color_to(cg, gt);
  DamageMask mask(d);
  for (int z = 10; z < 20; ++z)
    for (int y = 3; y < 12; ++y)
      for (int x = 2; x < 13; ++x) mask.set(d.index(x, y, z), true);
  VoxelGrid vd = gt;
  ColorVolume cd = cg;
  for (std::size_t i = 0; i < d.count(); ++i)
    if (mask[i]) {
      vd.set(i, false);
      for (int c = 0; c < 3; ++c) cd.at(c, i) = 0;
    }

  const SymmetryFill f = symmetry_baseline(vd, cd, mask);
  CHECK(f.axis == MirrorAxis::kX);
  CHECK(f.iou == 1.0);
  CHECK(f.result.v_hat == gt);
  CHECK(std::equal(f.result.c_hat.values().begin(), f.result.c_hat.values().end(), cg.values().begin()));
}

TEST_CASE("symmetry baseline axis choice and preservation") {
  const Dims d{};
  const VoxelGrid gt = box(d, 2, 20, 6, 25, 3, 28);
  CHECK(mirror_iou(gt, DamageMask(d), MirrorAxis::kY) == 1.0);
  CHECK(mirror_iou(gt, DamageMask(d), MirrorAxis::kX) < 1.0);
  DamageMask mask(d);
  for (int z = 12; z < 16; ++z)
    for (int y = 6; y < 10; ++y)
      for (int x = 4; x < 9; ++x) mask.set(d.index(x, y, z), true);
  VoxelGrid vd = gt;
  for (std::size_t i = 0; i < d.count(); ++i)
    if (mask[i]) vd.set(i, false);
  ColorVolume cd(d);
  Rng rng(4);
  for (std::size_t i = 0; i < d.count(); ++i)
    for (int c = 0; c < 3; ++c) cd.at(c, i) = vd[i] ? static_cast<float>(rng.uniform()) : 0.0F;

  const SymmetryFill f = symmetry_baseline(vd, cd, mask);
  CHECK(f.axis == MirrorAxis::kY);
  CHECK(f.result.v_hat == gt);
  int bad = 0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (mask[i]) continue;
    bad += f.result.v_hat[i] != vd[i];
    for (int c = 0; c < 3; ++c) bad += f.result.c_composed.at(c, i) != cd.at(c, i);
  }
  CHECK(bad == 0);

  const SymmetryFill none = symmetry_baseline(vd, cd, DamageMask(d));
  CHECK(none.result.v_hat == vd);
  CHECK(std::equal(none.result.c_hat.values().begin(), none.result.c_hat.values().end(), cd.values().begin()));
}

TEST_CASE("symmetry baseline never touches unmasked voxels") {
  const Dims d{};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto v = oracle::from_bits<VoxelGrid>(oracle::random_bits(d.count(), 0.4, 100 + s), d);
    const auto m = oracle::from_bits<DamageMask>(oracle::random_bits(d.count(), 0.1, 200 + s), d);
    ColorVolume c(d);
    Rng rng(s);
    for (std::size_t i = 0; i < d.count(); ++i)
      for (int ch = 0; ch < 3; ++ch) c.at(ch, i) = v[i] ? static_cast<float>(rng.uniform()) : 0.0F;
    const SymmetryFill f = symmetry_baseline(v, c, m);
    int bad = 0;
    for (std::size_t i = 0; i < d.count(); ++i) {
      if (m[i]) continue;
      bad += f.result.v_hat[i] != v[i];
      for (int ch = 0; ch < 3; ++ch) bad += f.result.c_hat.at(ch, i) != c.at(ch, i);
    }
    CHECK(bad == 0);
  }
}
