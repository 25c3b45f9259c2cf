// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

#include "voxinpaint/volume.hpp"

namespace voxinpaint {

struct StructuringElement {
  enum class Kind { kBox, kSphere };

  Kind kind = Kind::kBox;
  int radius = 1;
  std::vector<std::array<int, 3>> offsets;

  /// (2r+1)^3 neighborhood; radius 1 is the 3x3x3 element.
  static StructuringElement box(int radius);
  /// Integer offsets v with |v|^2 <= r^2 (exact integer test).
  static StructuringElement sphere(int radius);

  /// Point reflection v -> -v.
  [[nodiscard]] StructuringElement reflected() const;
};

namespace morphology_detail {
void erode(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& d,
           const StructuringElement& se);
void dilate(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& d,
            const StructuringElement& se);
void close(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& d,
           const StructuringElement& se);
}  // namespace morphology_detail

// Voxels outside the lattice count as empty for both operations, so erosion
// eats in from the lattice faces and dilation never wraps.

/// 1 iff every offset from the voxel lands on an occupied voxel.
template <class Tag>
BinaryVolume<Tag> erode(const BinaryVolume<Tag>& g, const StructuringElement& se) {
  BinaryVolume<Tag> out(g.dims());
  std::vector<std::uint8_t> buf(g.size());
  morphology_detail::erode(g.bytes(), buf, g.dims(), se);
  for (std::size_t i = 0; i < buf.size(); ++i) out.set(i, buf[i] != 0);
  return out;
}

/// 1 iff some offset from the voxel reaches an occupied voxel.
template <class Tag>
BinaryVolume<Tag> dilate(const BinaryVolume<Tag>& g, const StructuringElement& se) {
  BinaryVolume<Tag> out(g.dims());
  std::vector<std::uint8_t> buf(g.size());
  morphology_detail::dilate(g.bytes(), buf, g.dims(), se);
  for (std::size_t i = 0; i < buf.size(); ++i) out.set(i, buf[i] != 0);
  return out;
}

/// Dilation then erosion with the same element, evaluated on a lattice
/// padded by the element radius so matter dilated past a face is still seen
/// by the erosion. This keeps closing extensive up to the lattice faces;
/// away from the faces it equals erode(dilate(g)).
template <class Tag>
BinaryVolume<Tag> close(const BinaryVolume<Tag>& g, const StructuringElement& se) {
  BinaryVolume<Tag> out(g.dims());
  std::vector<std::uint8_t> buf(g.size());
  morphology_detail::close(g.bytes(), buf, g.dims(), se);
  for (std::size_t i = 0; i < buf.size(); ++i) out.set(i, buf[i] != 0);
  return out;
}

template <class Tag>
BinaryVolume<Tag> complement(const BinaryVolume<Tag>& g) {
  BinaryVolume<Tag> out(g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) out.set(i, !g[i]);
  return out;
}

}  // namespace voxinpaint
