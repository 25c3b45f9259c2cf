// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

// Naive reference implementations shared by the unit and acceptance tests.
// They deliberately avoid the library code paths they check.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "voxinpaint/random.hpp"
#include "voxinpaint/volume.hpp"

namespace oracle {

using voxinpaint::Dims;

inline std::vector<std::uint8_t> bits(const auto& v) {
  return {v.bytes().begin(), v.bytes().end()};
}

inline bool get(const std::vector<std::uint8_t>& g, const Dims& d, int x, int y, int z) {
  return d.contains(x, y, z) && g[d.index(x, y, z)] != 0;
}

using Offsets = std::vector<std::array<int, 3>>;

inline Offsets box(int r) {
  Offsets o;
  for (int z = -r; z <= r; ++z)
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x) o.push_back({x, y, z});
  return o;
}

inline Offsets ball(int r) {
  Offsets o;
  for (const auto& v : box(r))
    if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= r * r) o.push_back(v);
  return o;
}

inline std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& g, const Dims& d,
                                       const Offsets& se) {
  std::vector<std::uint8_t> out(g.size(), 0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        bool all = true;
        for (const auto& o : se) all = all && get(g, d, x + o[0], y + o[1], z + o[2]);
        out[d.index(x, y, z)] = all ? 1 : 0;
      }
  return out;
}

inline std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& g, const Dims& d,
                                        const Offsets& se) {
  std::vector<std::uint8_t> out(g.size(), 0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        bool any = false;
        for (const auto& o : se) any = any || get(g, d, x - o[0], y - o[1], z - o[2]);
        out[d.index(x, y, z)] = any ? 1 : 0;
      }
  return out;
}

// Closing of the occupied set in unbounded space with empty exterior,
// evaluated on a padded lattice and cropped back.
inline std::vector<std::uint8_t> close(const std::vector<std::uint8_t>& g, const Dims& d,
                                       const Offsets& se, int reach) {
  const Dims p{d.nx + 2 * reach, d.ny + 2 * reach, d.nz + 2 * reach};
  std::vector<std::uint8_t> padded(p.count(), 0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        padded[p.index(x + reach, y + reach, z + reach)] = g[d.index(x, y, z)];
  const auto c = erode(dilate(padded, p, se), p, se);
  std::vector<std::uint8_t> out(g.size(), 0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) out[d.index(x, y, z)] = c[p.index(x + reach, y + reach, z + reach)];
  return out;
}

// Complement of the empty region 6-connected to the lattice boundary.
inline std::vector<std::uint8_t> solid_fill(const std::vector<std::uint8_t>& g, const Dims& d) {
  std::vector<std::uint8_t> outside(g.size(), 0);
  std::deque<std::array<int, 3>> q;
  auto seed = [&](int x, int y, int z) {
    const auto i = d.index(x, y, z);
    if (!g[i] && !outside[i]) {
      outside[i] = 1;
      q.push_back({x, y, z});
    }
  };
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (x == 0 || y == 0 || z == 0 || x == d.nx - 1 || y == d.ny - 1 || z == d.nz - 1) seed(x, y, z);
  const int step[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!q.empty()) {
    auto [x, y, z] = q.front();
    q.pop_front();
    for (const auto& s : step) {
      const int a = x + s[0], b = y + s[1], c = z + s[2];
      if (d.contains(a, b, c)) seed(a, b, c);
    }
  }
  std::vector<std::uint8_t> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = outside[i] ? 0 : 1;
  return out;
}

using Point = std::array<double, 3>;

inline double dist(const Point& a, const Point& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

inline std::vector<Point> points(const std::vector<std::uint8_t>& g, const Dims& d) {
  std::vector<Point> p;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (g[d.index(x, y, z)]) p.push_back({double(x), double(y), double(z)});
  return p;
}

inline double nearest(const Point& p, const std::vector<Point>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, dist(p, q));
  return best;
}

inline double chamfer(const std::vector<Point>& a, const std::vector<Point>& b) {
  double sa = 0, sb = 0;
  for (const auto& p : a) sa += nearest(p, b);
  for (const auto& p : b) sb += nearest(p, a);
  return sa / a.size() + sb / b.size();
}

struct Fscore {
  double precision, recall, f;
};

inline Fscore fscore(const std::vector<Point>& pred, const std::vector<Point>& gt, double tau) {
  std::size_t hp = 0, hr = 0;
  for (const auto& p : pred) hp += nearest(p, gt) <= tau;
  for (const auto& p : gt) hr += nearest(p, pred) <= tau;
  const double P = pred.empty() ? 0.0 : double(hp) / pred.size();
  const double R = double(hr) / gt.size();
  return {P, R, P + R > 0 ? 2 * P * R / (P + R) : 0.0};
}

inline std::vector<std::uint8_t> random_bits(std::size_t n, double p, std::uint64_t seed) {
  voxinpaint::Rng rng(seed);
  std::vector<std::uint8_t> g(n);
  for (auto& b : g) b = rng.bernoulli(p) ? 1 : 0;
  return g;
}

template <class V>
V from_bits(const std::vector<std::uint8_t>& b, const Dims& d) {
  V v(d);
  for (std::size_t i = 0; i < b.size(); ++i) v.set(i, b[i] != 0);
  return v;
}

}  // namespace oracle
