// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/morphology.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace voxinpaint {

StructuringElement StructuringElement::box(int radius) {
  if (radius < 1) throw std::invalid_argument("box element radius must be >= 1");
  StructuringElement se;
  se.kind = Kind::kBox;
  se.radius = radius;
  for (int z = -radius; z <= radius; ++z)
    for (int y = -radius; y <= radius; ++y)
      for (int x = -radius; x <= radius; ++x) se.offsets.push_back({x, y, z});
  return se;
}

StructuringElement StructuringElement::sphere(int radius) {
  if (radius < 1) throw std::invalid_argument("sphere element radius must be >= 1");
  StructuringElement se;
  se.kind = Kind::kSphere;
  se.radius = radius;
  const int r2 = radius * radius;
  for (int z = -radius; z <= radius; ++z)
    for (int y = -radius; y <= radius; ++y)
      for (int x = -radius; x <= radius; ++x)
        if (x * x + y * y + z * z <= r2) se.offsets.push_back({x, y, z});
  return se;
}

StructuringElement StructuringElement::reflected() const {
  StructuringElement se = *this;
  for (auto& o : se.offsets) o = {-o[0], -o[1], -o[2]};
  return se;
}

namespace morphology_detail {
namespace {

// `all` selects erosion (every offset occupied) versus dilation (any).
void apply(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& d,
           const StructuringElement& se, bool all) {
  if (in.size() != d.count() || out.size() != d.count())
    throw std::invalid_argument("morphology: buffer size does not match dims " + to_string(d));
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        bool result = all;
        for (const auto& o : se.offsets) {
          // Dilation gathers from g(p - o), erosion from g(p + o).
          const int sx = all ? x + o[0] : x - o[0];
          const int sy = all ? y + o[1] : y - o[1];
          const int sz = all ? z + o[2] : z - o[2];
          const bool v = d.contains(sx, sy, sz) && in[d.index(sx, sy, sz)] != 0;
          if (all && !v) {
            result = false;
            break;
          }
          if (!all && v) {
            result = true;
            break;
          }
        }
        out[d.index(x, y, z)] = result ? 1 : 0;
      }
}

}  // namespace

void erode(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& d,
           const StructuringElement& se) {
  apply(in, out, d, se, true);
}

void dilate(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& d,
            const StructuringElement& se) {
  apply(in, out, d, se, false);
}

void close(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& d,
           const StructuringElement& se) {
  if (in.size() != d.count() || out.size() != d.count())
    throw std::invalid_argument("morphology: buffer size does not match dims " + to_string(d));
  int reach = 0;
  for (const auto& o : se.offsets)
    for (int c : o) reach = std::max(reach, std::abs(c));
  const Dims p{d.nx + 2 * reach, d.ny + 2 * reach, d.nz + 2 * reach};
  std::vector<std::uint8_t> padded(p.count(), 0), dilated(p.count()), closed(p.count());
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        padded[p.index(x + reach, y + reach, z + reach)] = in[d.index(x, y, z)];
  apply(padded, dilated, p, se, false);
  apply(dilated, closed, p, se, true);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        out[d.index(x, y, z)] = closed[p.index(x + reach, y + reach, z + reach)];
}

}  // namespace morphology_detail
}  // namespace voxinpaint
