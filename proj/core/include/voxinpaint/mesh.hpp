// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "voxinpaint/volume.hpp"

namespace voxinpaint {

using Vec3 = std::array<double, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  /// Empty, or one RGB per vertex.
  std::vector<Rgb> colors;

  /// Throws std::invalid_argument on out-of-range indices or bad colors.
  void validate() const;
};

/// Parses the Wavefront OBJ subset: `v x y z [r g b]`, `f` with polygon fan
/// triangulation and `a/b/c` index forms. Other records are ignored.
TriangleMesh parse_obj(std::istream& in);
TriangleMesh load_obj(const std::filesystem::path& path);

/// Uniformly scales and centers the mesh so its bounding box fits
/// [-0.5, 0.5]^3 with the longest axis spanning exactly 1.
TriangleMesh normalize_mesh(const TriangleMesh& mesh);

struct VoxelizeOptions {
  /// Color for meshes that carry no vertex colors.
  Rgb default_albedo{0.9F, 0.9F, 0.88F};
  /// Slack when checking that the mesh lies inside the unit cube.
  double bounds_tolerance = 1e-9;
};

struct VoxelizeResult {
  VoxelGrid occupancy;
  ColorVolume color;
  VoxelGrid surface;
  /// Set when some mesh edge is not shared by exactly two triangles.
  bool open_mesh_warning = false;
};

/// Conservative surface rasterization (triangle/cell overlap) followed by an
/// exterior flood fill. Each occupied voxel takes the color of the nearest
/// surface point, barycentrically interpolated from vertex colors.
VoxelizeResult voxelize(const TriangleMesh& mesh,
                        const VoxelizeOptions& options = {});

/// Exact separating-axis test between a triangle and an axis-aligned box.
bool triangle_box_overlap(const Vec3& center, const Vec3& half_size,
                          const std::array<Vec3, 3>& tri);

/// Closest point on a triangle; also reports its barycentric coordinates.
Vec3 closest_point_on_triangle(const Vec3& p, const std::array<Vec3, 3>& tri,
                               Vec3& barycentric);

/// Marks everything not 6-connected to the lattice boundary through empty
/// voxels. Surface voxels stay occupied.
VoxelGrid exterior_flood_fill(const VoxelGrid& surface);

/// Zeroes occupancy and color wherever the mask is set.
std::pair<VoxelGrid, ColorVolume> apply_mask_removal(const VoxelGrid& v,
                                                     const ColorVolume& c,
                                                     const DamageMask& m);

/// Center of voxel index i along one axis in normalized mesh coordinates.
inline double voxel_center(int i, int resolution = kResolution) {
  return -0.5 + (i + 0.5) / resolution;
}

}  // namespace voxinpaint
