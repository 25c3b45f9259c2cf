// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace voxinpaint {

/// Lattice size per axis used by every pipeline stage.
inline constexpr int kResolution = 32;

struct Dims {
  int nx = kResolution;
  int ny = kResolution;
  int nz = kResolution;

  [[nodiscard]] constexpr std::size_t count() const {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  [[nodiscard]] constexpr bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }
  /// x-fastest linear index; z selects the axial slice.
  [[nodiscard]] constexpr std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) +
                                           static_cast<std::size_t>(ny) * z);
  }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

struct OccupancyTag {};
struct MaskTag {};

/// Binary volume over a 3D lattice. Values are stored as bytes in {0,1}.
/// The tag separates occupancy grids from damage masks at the type level;
/// explicit conversions live below.
template <class Tag>
class BinaryVolume {
 public:
  BinaryVolume() : BinaryVolume(Dims{}) {}
  explicit BinaryVolume(Dims dims, std::uint8_t fill = 0)
      : dims_(dims), values_(dims.count(), fill ? 1 : 0) {}

  [[nodiscard]] const Dims& dims() const { return dims_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  [[nodiscard]] bool at(int x, int y, int z) const {
    return values_[dims_.index(x, y, z)] != 0;
  }
  /// Out-of-lattice coordinates read as empty.
  [[nodiscard]] bool at_or_empty(int x, int y, int z) const {
    return dims_.contains(x, y, z) && at(x, y, z);
  }
  void set(int x, int y, int z, bool v) {
    values_[dims_.index(x, y, z)] = v ? 1 : 0;
  }
  [[nodiscard]] bool operator[](std::size_t i) const { return values_[i] != 0; }
  void set(std::size_t i, bool v) { values_[i] = v ? 1 : 0; }

  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return values_; }

  [[nodiscard]] std::size_t count() const {
    return static_cast<std::size_t>(
        std::count(values_.begin(), values_.end(), std::uint8_t{1}));
  }
  [[nodiscard]] bool empty() const { return count() == 0; }

  friend bool operator==(const BinaryVolume&, const BinaryVolume&) = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> values_;
};

using VoxelGrid = BinaryVolume<OccupancyTag>;
using DamageMask = BinaryVolume<MaskTag>;

template <class To, class From>
BinaryVolume<To> retag(const BinaryVolume<From>& v) {
  BinaryVolume<To> out(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) out.set(i, v[i]);
  return out;
}

inline DamageMask as_mask(const VoxelGrid& g) { return retag<MaskTag>(g); }
inline VoxelGrid as_grid(const DamageMask& m) { return retag<OccupancyTag>(m); }

/// Elementwise a <= b.
template <class A, class B>
bool is_subset(const BinaryVolume<A>& a, const BinaryVolume<B>& b) {
  if (a.dims() != b.dims()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

using Rgb = std::array<float, 3>;

/// Planar RGB volume aligned with a BinaryVolume: channel c of voxel i is at
/// c * count + i.
class ColorVolume {
 public:
  static constexpr int kChannels = 3;

  ColorVolume() : ColorVolume(Dims{}) {}
  explicit ColorVolume(Dims dims)
      : dims_(dims), values_(kChannels * dims.count(), 0.0F) {}

  [[nodiscard]] const Dims& dims() const { return dims_; }

  [[nodiscard]] float at(int c, std::size_t i) const {
    return values_[c * dims_.count() + i];
  }
  float& at(int c, std::size_t i) { return values_[c * dims_.count() + i]; }
  [[nodiscard]] float at(int c, int x, int y, int z) const {
    return at(c, dims_.index(x, y, z));
  }

  [[nodiscard]] Rgb rgb(std::size_t i) const {
    return {at(0, i), at(1, i), at(2, i)};
  }
  void set_rgb(std::size_t i, const Rgb& c) {
    for (int k = 0; k < kChannels; ++k) at(k, i) = c[k];
  }
  void set_rgb(int x, int y, int z, const Rgb& c) {
    set_rgb(dims_.index(x, y, z), c);
  }

  [[nodiscard]] std::span<const float> values() const { return values_; }
  [[nodiscard]] std::span<float> values() { return values_; }

  friend bool operator==(const ColorVolume&, const ColorVolume&) = default;

 private:
  Dims dims_;
  std::vector<float> values_;
};

/// True when every nonzero color channel sits on an occupied voxel.
template <class Tag>
bool color_supported_by(const ColorVolume& c, const BinaryVolume<Tag>& g) {
  if (c.dims() != g.dims()) return false;
  const std::size_t n = g.size();
  for (int ch = 0; ch < ColorVolume::kChannels; ++ch)
    for (std::size_t i = 0; i < n; ++i)
      if (c.at(ch, i) != 0.0F && !g[i]) return false;
  return true;
}

/// Zeroes color wherever the grid is empty.
template <class Tag>
void restrict_color_to(ColorVolume& c, const BinaryVolume<Tag>& g) {
  const std::size_t n = g.size();
  for (int ch = 0; ch < ColorVolume::kChannels; ++ch)
    for (std::size_t i = 0; i < n; ++i)
      if (!g[i]) c.at(ch, i) = 0.0F;
}

/// Paired damaged/intact volumes with provenance.
struct Sample {
  VoxelGrid v_gt;
  ColorVolume c_gt;
  VoxelGrid v_dam;
  ColorVolume c_dam;
  DamageMask mask;
  std::uint64_t seed = 0;
  std::string source_id;
  bool degenerate = false;
};

/// Throws std::invalid_argument naming the first violated Sample invariant.
void check_sample_invariants(const Sample& s);

}  // namespace voxinpaint
