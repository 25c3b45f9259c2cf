// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "voxinpaint/stage2.hpp"
#include "voxinpaint/volume.hpp"

namespace voxinpaint {

/// Reported in place of an infinite PSNR.
inline constexpr double kPsnrCapDb = 99.0;

/// Nearest occupied voxel lookup backed by an exact squared Euclidean
/// distance transform of the lattice.
class NearestIndex {
 public:
  explicit NearestIndex(const VoxelGrid& occupied);

  [[nodiscard]] bool empty() const { return empty_; }
  /// Squared distance from voxel (x, y, z) to the nearest occupied voxel.
  [[nodiscard]] std::int64_t squared_distance(int x, int y, int z) const;
  [[nodiscard]] double distance(int x, int y, int z) const;

 private:
  Dims dims_;
  bool empty_ = true;
  std::vector<std::int64_t> d2_;
};

/// Mean nearest distance from each occupied voxel of `from` to `to`.
double directed_mean_distance(const VoxelGrid& from, const NearestIndex& to);

/// Sum of the two directed mean nearest-neighbor distances in voxel units
/// (1 voxel = 1 mm). Throws std::invalid_argument if either set is empty.
double chamfer(const VoxelGrid& a, const VoxelGrid& b);

struct GeomReport {
  bool defined = false;
  std::string diagnostic;
  double chamfer_mm = std::numeric_limits<double>::quiet_NaN();
  double fscore = 0, precision = 0, recall = 0;
  std::size_t occupied_pred = 0, occupied_gt = 0;
};

/// Precision, recall and F at an inclusive distance threshold, plus Chamfer.
GeomReport fscore_at(const VoxelGrid& pred, const VoxelGrid& gt, double threshold);
inline GeomReport fscore_1mm(const VoxelGrid& pred, const VoxelGrid& gt) { return fscore_at(pred, gt, 1.0); }

/// 10 log10(1 / mse), or kPsnrCapDb when mse is 0.
double psnr_from_mse(double mse);

struct ColorReport {
  bool defined = false;
  std::string diagnostic;
  double masked_mse = std::numeric_limits<double>::quiet_NaN();
  double psnr_db = std::numeric_limits<double>::quiet_NaN();
  /// One entry per axial slice; NaN where the slice has no overlap.
  std::vector<double> per_slice_psnr;
  std::size_t overlap_count = 0;
};

/// Color error over voxels occupied in both v_hat and v_gt.
ColorReport masked_color_metrics(const VoxelGrid& v_hat, const ColorVolume& c_hat, const VoxelGrid& v_gt,
                                 const ColorVolume& c_gt);

enum class MirrorAxis { kX, kY };

/// Occupancy IoU between v_dam and its mirror over voxel pairs that are both
/// unmasked.
double mirror_iou(const VoxelGrid& v_dam, const DamageMask& mask, MirrorAxis axis);

struct SymmetryFill {
  InpaintResult result;
  MirrorAxis axis = MirrorAxis::kX;
  double iou = 0;
};

/// Mirrors occupied unmasked voxels into the mask across the better of the
/// two axis-perpendicular center planes. Unmasked voxels are untouched.
SymmetryFill symmetry_baseline(const VoxelGrid& v_dam, const ColorVolume& c_dam, const DamageMask& mask);

}  // namespace voxinpaint
