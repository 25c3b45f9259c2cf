// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include "voxinpaint/volume.hpp"

namespace voxinpaint {

/// VVOL1 volume files: the line "VVOL1", ASCII header lines
/// (`dims`, `channels`, `dtype`, `encoding raw-le`), a blank line, then the
/// little-endian payload with x varying fastest. Multi-channel payloads are
/// channel-planar. Occupancy and masks are u8 with one channel, colors f32
/// with three.
namespace vvol {

struct Header {
  Dims dims;
  int channels = 1;
  enum class DType { kU8, kF32 } dtype = DType::kU8;
};

void write(std::ostream& out, const VoxelGrid& grid);
void write(std::ostream& out, const DamageMask& mask);
void write(std::ostream& out, const ColorVolume& color);

Header read_header(std::istream& in);
VoxelGrid read_grid(std::istream& in);
DamageMask read_mask(std::istream& in);
ColorVolume read_color(std::istream& in);

void save(const std::filesystem::path& path, const VoxelGrid& grid);
void save(const std::filesystem::path& path, const DamageMask& mask);
void save(const std::filesystem::path& path, const ColorVolume& color);
VoxelGrid load_grid(const std::filesystem::path& path);
DamageMask load_mask(const std::filesystem::path& path);
ColorVolume load_color(const std::filesystem::path& path);

}  // namespace vvol
}  // namespace voxinpaint
