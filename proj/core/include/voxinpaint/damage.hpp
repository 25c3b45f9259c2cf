// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voxinpaint/volume.hpp"

namespace voxinpaint {

enum class HoleShape { kCircle, kPolygon };

struct DamageConfig {
  int holes_per_slice_min = 1;
  int holes_per_slice_max = 3;
  double hole_radius_min = 5.0;
  double hole_radius_max = 10.0;
  bool allow_circle = true;
  bool allow_polygon = true;
  int erosion_radius = 2;
  std::uint64_t seed = 0;
  /// Test hook: skip slice holes entirely.
  bool holes_enabled = true;
  /// Regeneration budget when damage empties the grid.
  int max_attempts = 8;

  void validate() const;
};

/// 2D binary stencil over one axial slice, x fastest.
struct SliceStencil {
  int nx = kResolution;
  int ny = kResolution;
  std::vector<std::uint8_t> values = std::vector<std::uint8_t>(kResolution * kResolution, 0);

  [[nodiscard]] bool at(int x, int y) const { return values[x + nx * y] != 0; }
  [[nodiscard]] std::size_t count() const;
};

/// Circle: pixels (x, y) with (x-cx)^2 + (y-cy)^2 <= r^2. Polygon: convex
/// hull of 5-8 points on the radius-r circle at jittered angles, rasterized
/// by a point-in-polygon test on pixel coordinates. Clipped to the slice.
SliceStencil sample_hole_region(HoleShape shape, double center_x, double center_y,
                                double radius, std::uint64_t seed);

/// M = 1[v_gt = 1 and v_dam = 0]. Throws if v_dam has matter v_gt lacks.
DamageMask compute_mask(const VoxelGrid& v_gt, const VoxelGrid& v_dam);

/// Record of the holes drawn for a sample, useful for debugging.
struct HoleRecord {
  int slice;
  HoleShape shape;
  double center_x, center_y, radius;
};

struct DamageTrace {
  std::vector<HoleRecord> holes;
  int attempts = 0;
};

/// Per axial slice: 1-3 random holes cleared from that slice only; then one
/// global erosion with a sphere of `erosion_radius`. If the damaged grid
/// comes out empty the draw is repeated with a derived seed, up to
/// `max_attempts` times, after which the sample is flagged degenerate.
Sample synth_damage(const VoxelGrid& v_gt, const ColorVolume& c_gt, const DamageConfig& cfg,
                    std::string source_id = {}, DamageTrace* trace = nullptr);

}  // namespace voxinpaint
