// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "voxinpaint/random.hpp"

namespace voxinpaint {
namespace {

constexpr double kCenter = (kResolution - 1) / 2.0;

enum class Decoration { kPlain, kBands, kChecker };

struct Palette {
  Rgb glaze;
  Rgb accent;
  Decoration decoration;
  int period;
};

Palette draw_palette(Rng& rng) {
  Palette p{};
  p.glaze = {static_cast<float>(rng.uniform(0.86, 0.97)), static_cast<float>(rng.uniform(0.84, 0.95)),
             static_cast<float>(rng.uniform(0.78, 0.90))};
  p.accent = {static_cast<float>(rng.uniform(0.05, 0.30)), static_cast<float>(rng.uniform(0.15, 0.40)),
              static_cast<float>(rng.uniform(0.45, 0.75))};
  const auto pick = rng.uniform_int(0, 2);
  p.decoration = pick == 0 ? Decoration::kPlain : (pick == 1 ? Decoration::kBands : Decoration::kChecker);
  p.period = static_cast<int>(rng.uniform_int(3, 6));
  return p;
}

// Depends on |dx|, |dy| and z only, so decoration shares the shape's mirror
// symmetry.
Rgb shade(const Palette& p, int x, int y, int z, double jitter) {
  bool accent = false;
  const int ax = static_cast<int>(std::abs(x - kCenter));
  const int ay = static_cast<int>(std::abs(y - kCenter));
  switch (p.decoration) {
    case Decoration::kPlain:
      break;
    case Decoration::kBands:
      accent = (z / p.period) % 2 == 1;
      break;
    case Decoration::kChecker:
      accent = ((ax / p.period) + (ay / p.period) + (z / p.period)) % 2 == 1;
      break;
  }
  const Rgb& base = accent ? p.accent : p.glaze;
  Rgb c{};
  for (int ch = 0; ch < 3; ++ch)
    c[ch] = static_cast<float>(std::clamp(base[ch] + jitter * (z - kCenter) / kResolution, 0.0, 1.0));
  return c;
}

template <class Inside>
ShapeVolumes rasterize(Rng& rng, Inside inside) {
  const Palette palette = draw_palette(rng);
  const double jitter = rng.uniform(-0.05, 0.05);
  ShapeVolumes out{VoxelGrid{}, ColorVolume{}};
  for (int z = 0; z < kResolution; ++z)
    for (int y = 0; y < kResolution; ++y)
      for (int x = 0; x < kResolution; ++x)
        if (inside(x - kCenter, y - kCenter, z)) {
          out.occupancy.set(x, y, z, true);
          out.color.set_rgb(x, y, z, shade(palette, x, y, z, jitter));
        }
  return out;
}

}  // namespace

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "sphere") return ShapeKind::kSphere;
  if (name == "vase") return ShapeKind::kVase;
  if (name == "box_with_pattern") return ShapeKind::kBoxWithPattern;
  throw std::invalid_argument("unknown shape kind '" + std::string(name) + "'");
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kVase: return "vase";
    case ShapeKind::kBoxWithPattern: return "box_with_pattern";
  }
  throw std::invalid_argument("unknown shape kind");
}

ShapeVolumes generate_procedural_shape(ShapeKind kind, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "shape", 0, to_string(kind)));
  switch (kind) {
    case ShapeKind::kSphere: {
      const double r = rng.uniform(8.0, 14.5);
      const double r2 = r * r;
      return rasterize(rng, [=](double dx, double dy, int z) {
        const double dz = z - kCenter;
        return dx * dx + dy * dy + dz * dz <= r2;
      });
    }
    case ShapeKind::kVase: {
      const int z0 = static_cast<int>(rng.uniform_int(1, 4));
      const int z1 = static_cast<int>(rng.uniform_int(26, 30));
      const double base_r = rng.uniform(8.5, 10.5);
      const double bulge = rng.uniform(1.0, 4.0);
      const double wiggle = rng.uniform(0.0, 1.5);
      const double freq = rng.uniform(1.5, 3.5);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double wall = rng.uniform(5.0, 6.5);
      const int floor_thickness = static_cast<int>(rng.uniform_int(3, 5));
      return rasterize(rng, [=](double dx, double dy, int z) {
        if (z < z0 || z > z1) return false;
        const double u = static_cast<double>(z - z0) / (z1 - z0);
        const double radius = std::min(
            15.5, base_r + bulge * std::sin(std::numbers::pi * u) +
                      wiggle * std::sin(2.0 * std::numbers::pi * freq * u + phase));
        const double rho = std::sqrt(dx * dx + dy * dy);
        if (rho > radius) return false;
        return z < z0 + floor_thickness || rho >= radius - wall;
      });
    }
    case ShapeKind::kBoxWithPattern: {
      const int hx = static_cast<int>(rng.uniform_int(6, 14));
      const int hy = static_cast<int>(rng.uniform_int(6, 14));
      const int hz = static_cast<int>(rng.uniform_int(6, 14));
      return rasterize(rng, [=](double dx, double dy, int z) {
        const double dz = z - kCenter;
        return std::abs(dx) < hx && std::abs(dy) < hy && std::abs(dz) < hz;
      });
    }
  }
  throw std::invalid_argument("unknown shape kind");
}

}  // namespace voxinpaint
