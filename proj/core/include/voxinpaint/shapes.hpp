// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "voxinpaint/volume.hpp"

namespace voxinpaint {

enum class ShapeKind { kSphere, kVase, kBoxWithPattern };

/// Accepts "sphere", "vase", "box_with_pattern"; throws otherwise.
ShapeKind parse_shape_kind(std::string_view name);
std::string to_string(ShapeKind kind);

struct ShapeVolumes {
  VoxelGrid occupancy;
  ColorVolume color;
};

/// Seeded procedural stand-in for scanned artifacts. Every kind is centered
/// on the lattice so that x -> 31-x and y -> 31-y map the occupancy to
/// itself. Colors alternate between near-uniform glazes and banded or
/// checkered decoration depending on the seed. Vase walls are thick enough
/// to survive a radius-2 erosion.
ShapeVolumes generate_procedural_shape(ShapeKind kind, std::uint64_t seed);

}  // namespace voxinpaint
