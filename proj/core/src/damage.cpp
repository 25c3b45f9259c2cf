// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/damage.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "voxinpaint/morphology.hpp"
#include "voxinpaint/random.hpp"

namespace voxinpaint {

void DamageConfig::validate() const {
  if (holes_per_slice_min < 1 || holes_per_slice_min > holes_per_slice_max)
    throw std::invalid_argument("damage: need 1 <= holes_per_slice_min <= holes_per_slice_max");
  if (!(hole_radius_min >= 1.0 && hole_radius_min <= hole_radius_max && hole_radius_max < 16.0))
    throw std::invalid_argument("damage: hole radii must satisfy 1 <= min <= max < 16");
  if (erosion_radius < 0) throw std::invalid_argument("damage: erosion_radius must be >= 0");
  if (!allow_circle && !allow_polygon)
    throw std::invalid_argument("damage: at least one hole shape must be allowed");
  if (max_attempts < 1) throw std::invalid_argument("damage: max_attempts must be >= 1");
}

std::size_t SliceStencil::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

SliceStencil sample_hole_region(HoleShape shape, double cx, double cy, double radius,
                                std::uint64_t seed) {
  SliceStencil s;
  if (shape == HoleShape::kCircle) {
    const double r2 = radius * radius;
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const double dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy <= r2) s.values[x + s.nx * y] = 1;
      }
    return s;
  }

  Rng rng(seed);
  const int k = static_cast<int>(rng.uniform_int(5, 8));
  const double step = 2.0 * std::numbers::pi / k;
  const double rotation = rng.uniform(0.0, step);
  std::vector<std::array<double, 2>> poly;
  for (int i = 0; i < k; ++i) {
    // Jitter stays inside each sector, so angles remain sorted and the
    // polygon is convex.
    const double a = rotation + step * (i + rng.uniform(-0.35, 0.35));
    poly.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
  }
  for (int y = 0; y < s.ny; ++y)
    for (int x = 0; x < s.nx; ++x) {
      bool inside = true;
      for (int i = 0; i < k && inside; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % k];
        const double cr = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        inside = cr >= 0.0;
      }
      if (inside) s.values[x + s.nx * y] = 1;
    }
  return s;
}

DamageMask compute_mask(const VoxelGrid& v_gt, const VoxelGrid& v_dam) {
  if (v_gt.dims() != v_dam.dims()) throw std::invalid_argument("compute_mask: dims mismatch");
  DamageMask m(v_gt.dims());
  for (std::size_t i = 0; i < v_gt.size(); ++i) {
    if (v_dam[i] && !v_gt[i])
      throw std::invalid_argument("compute_mask: damaged grid has matter absent from ground truth");
    m.set(i, v_gt[i] && !v_dam[i]);
  }
  return m;
}

Sample synth_damage(const VoxelGrid& v_gt, const ColorVolume& c_gt, const DamageConfig& cfg,
                    std::string source_id, DamageTrace* trace) {
  cfg.validate();
  if (v_gt.dims() != c_gt.dims()) throw std::invalid_argument("synth_damage: dims mismatch");
  if (!color_supported_by(c_gt, v_gt))
    throw std::invalid_argument("synth_damage: ground-truth color outside occupied voxels");
  const Dims d = v_gt.dims();

  Sample s;
  s.v_gt = v_gt;
  s.c_gt = c_gt;
  s.seed = cfg.seed;
  s.source_id = std::move(source_id);

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const std::uint64_t seed =
        attempt == 0 ? cfg.seed : derive_seed(cfg.seed, "damage-retry", attempt, s.source_id);
    Rng rng(seed);
    if (trace) {
      trace->holes.clear();
      trace->attempts = attempt + 1;
    }
    VoxelGrid v = v_gt;
    if (cfg.holes_enabled) {
      for (int z = 0; z < d.nz; ++z) {
        const auto holes = rng.uniform_int(cfg.holes_per_slice_min, cfg.holes_per_slice_max);
        for (std::int64_t h = 0; h < holes; ++h) {
          HoleShape shape = HoleShape::kCircle;
          if (cfg.allow_circle && cfg.allow_polygon) {
            shape = rng.bernoulli(0.5) ? HoleShape::kCircle : HoleShape::kPolygon;
          } else if (cfg.allow_polygon) {
            shape = HoleShape::kPolygon;
          }
          const double cx = rng.uniform(0.0, d.nx);
          const double cy = rng.uniform(0.0, d.ny);
          const double r = rng.uniform(cfg.hole_radius_min, cfg.hole_radius_max);
          const auto stencil = sample_hole_region(shape, cx, cy, r, rng.next_u64());
          for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x)
              if (stencil.at(x, y)) v.set(x, y, z, false);
          if (trace) trace->holes.push_back({z, shape, cx, cy, r});
        }
      }
    }
    if (cfg.erosion_radius > 0) v = erode(v, StructuringElement::sphere(cfg.erosion_radius));

    s.v_dam = std::move(v);
    s.seed = seed;
    if (!s.v_dam.empty() || v_gt.empty()) break;
  }
  s.degenerate = s.v_dam.empty() && !v_gt.empty();
  s.mask = compute_mask(s.v_gt, s.v_dam);
  s.c_dam = c_gt;
  restrict_color_to(s.c_dam, s.v_dam);
  return s;
}

}  // namespace voxinpaint
