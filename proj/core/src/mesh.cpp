// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace voxinpaint {
namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

int parse_index(const std::string& token, std::size_t vertex_count) {
  const std::string head = token.substr(0, token.find('/'));
  const long idx = std::stol(head);
  if (idx > 0) return static_cast<int>(idx - 1);
  if (idx < 0) return static_cast<int>(static_cast<long>(vertex_count) + idx);
  throw std::invalid_argument("obj: face index 0 is invalid");
}

// Projection of the triangle and the box onto `axis` must overlap.
bool axis_overlaps(const Vec3& axis, const std::array<Vec3, 3>& v, const Vec3& h) {
  const double p0 = dot(v[0], axis);
  const double p1 = dot(v[1], axis);
  const double p2 = dot(v[2], axis);
  const double r = h[0] * std::abs(axis[0]) + h[1] * std::abs(axis[1]) +
                   h[2] * std::abs(axis[2]);
  const double lo = std::min({p0, p1, p2});
  const double hi = std::max({p0, p1, p2});
  return !(lo > r || hi < -r);
}

}  // namespace

void TriangleMesh::validate() const {
  if (!triangles.empty() && vertices.size() < 3)
    throw std::invalid_argument("mesh: triangles require at least 3 vertices");
  for (const auto& t : triangles)
    for (int i : t)
      if (i < 0 || static_cast<std::size_t>(i) >= vertices.size())
        throw std::invalid_argument("mesh: triangle index " + std::to_string(i) +
                                    " out of range");
  if (!colors.empty()) {
    if (colors.size() != vertices.size())
      throw std::invalid_argument("mesh: color count does not match vertex count");
    for (const auto& c : colors)
      for (float ch : c)
        if (!(ch >= 0.0F && ch <= 1.0F))
          throw std::invalid_argument("mesh: vertex color outside [0,1]");
  }
}

TriangleMesh parse_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string line;
  bool any_color = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 p{};
      if (!(ss >> p[0] >> p[1] >> p[2]))
        throw std::invalid_argument("obj: malformed vertex on line " + std::to_string(line_no));
      Rgb c{};
      if (ss >> c[0] >> c[1] >> c[2]) {
        any_color = true;
      } else {
        c = {-1.0F, -1.0F, -1.0F};
      }
      mesh.vertices.push_back(p);
      mesh.colors.push_back(c);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ss >> tok) poly.push_back(parse_index(tok, mesh.vertices.size()));
      if (poly.size() < 3)
        throw std::invalid_argument("obj: face with fewer than 3 vertices on line " +
                                    std::to_string(line_no));
      for (std::size_t k = 1; k + 1 < poly.size(); ++k)
        mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (!any_color) {
    mesh.colors.clear();
  } else {
    for (const auto& c : mesh.colors)
      if (c[0] < 0.0F)
        throw std::invalid_argument("obj: vertex colors present on some vertices only");
  }
  mesh.validate();
  return mesh;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("obj: cannot open " + path.string());
  return parse_obj(in);
}

TriangleMesh normalize_mesh(const TriangleMesh& mesh) {
  mesh.validate();
  if (mesh.triangles.empty())
    throw std::invalid_argument("normalize_mesh: mesh has no triangles");
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi = scale(lo, -1.0);
  for (const auto& v : mesh.vertices)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], v[a]);
      hi[a] = std::max(hi[a], v[a]);
    }
  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  if (!(extent > 0.0))
    throw std::invalid_argument("normalize_mesh: degenerate mesh with zero extent");
  const Vec3 center = scale(add(lo, hi), 0.5);
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = scale(sub(v, center), 1.0 / extent);
  return out;
}

bool triangle_box_overlap(const Vec3& center, const Vec3& h,
                          const std::array<Vec3, 3>& tri) {
  const std::array<Vec3, 3> v{sub(tri[0], center), sub(tri[1], center), sub(tri[2], center)};
  const std::array<Vec3, 3> e{sub(v[1], v[0]), sub(v[2], v[1]), sub(v[0], v[2])};
  // Box face normals.
  for (int a = 0; a < 3; ++a) {
    const double lo = std::min({v[0][a], v[1][a], v[2][a]});
    const double hi = std::max({v[0][a], v[1][a], v[2][a]});
    if (lo > h[a] || hi < -h[a]) return false;
  }
  // Triangle normal.
  const Vec3 n = cross(e[0], e[1]);
  if (!axis_overlaps(n, v, h)) return false;
  // Edge cross products.
  static constexpr std::array<Vec3, 3> kUnit{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  for (const auto& u : kUnit)
    for (const auto& ed : e) {
      const Vec3 axis = cross(u, ed);
      if (dot(axis, axis) == 0.0) continue;
      if (!axis_overlaps(axis, v, h)) return false;
    }
  return true;
}

Vec3 closest_point_on_triangle(const Vec3& p, const std::array<Vec3, 3>& tri,
                               Vec3& bary) {
  // Region classification after Ericson, Real-Time Collision Detection 5.1.5.
  const Vec3& a = tri[0];
  const Vec3& b = tri[1];
  const Vec3& c = tri[2];
  const Vec3 ab = sub(b, a);
  const Vec3 ac = sub(c, a);
  const Vec3 ap = sub(p, a);
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) {
    bary = {1, 0, 0};
    return a;
  }
  const Vec3 bp = sub(p, b);
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) {
    bary = {0, 1, 0};
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double t = d1 / (d1 - d3);
    bary = {1 - t, t, 0};
    return add(a, scale(ab, t));
  }
  const Vec3 cp = sub(p, c);
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) {
    bary = {0, 0, 1};
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double t = d2 / (d2 - d6);
    bary = {1 - t, 0, t};
    return add(a, scale(ac, t));
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    bary = {0, 1 - t, t};
    return add(b, scale(sub(c, b), t));
  }
  const double denom = va + vb + vc;
  if (denom == 0.0) {  // degenerate triangle
    bary = {1, 0, 0};
    return a;
  }
  const double v = vb / denom;
  const double w = vc / denom;
  bary = {1 - v - w, v, w};
  return add(a, add(scale(ab, v), scale(ac, w)));
}

VoxelGrid exterior_flood_fill(const VoxelGrid& surface) {
  const Dims d = surface.dims();
  std::vector<std::uint8_t> outside(d.count(), 0);
  std::deque<std::array<int, 3>> queue;
  auto seed = [&](int x, int y, int z) {
    const std::size_t i = d.index(x, y, z);
    if (!surface[i] && !outside[i]) {
      outside[i] = 1;
      queue.push_back({x, y, z});
    }
  };
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (x == 0 || y == 0 || z == 0 || x == d.nx - 1 || y == d.ny - 1 || z == d.nz - 1)
          seed(x, y, z);
  static constexpr std::array<std::array<int, 3>, 6> kNeighbors{
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  while (!queue.empty()) {
    const auto [x, y, z] = queue.front();
    queue.pop_front();
    for (const auto& o : kNeighbors) {
      const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
      if (d.contains(nx, ny, nz)) seed(nx, ny, nz);
    }
  }
  VoxelGrid solid(d);
  for (std::size_t i = 0; i < d.count(); ++i) solid.set(i, outside[i] == 0);
  return solid;
}

VoxelizeResult voxelize(const TriangleMesh& mesh, const VoxelizeOptions& options) {
  mesh.validate();
  for (const auto& v : mesh.vertices)
    for (double c : v)
      if (std::abs(c) > 0.5 + options.bounds_tolerance)
        throw std::invalid_argument("voxelize: mesh lies outside the unit cube; normalize first");

  const Dims d{};
  const int n = kResolution;
  const double cell = 1.0 / n;
  const Vec3 half{cell / 2, cell / 2, cell / 2};

  VoxelizeResult result;
  result.surface = VoxelGrid(d);
  std::vector<std::vector<int>> cell_tris(d.count());

  auto to_cell = [&](double c) {
    return std::clamp(static_cast<int>(std::floor((c + 0.5) * n)), 0, n - 1);
  };
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& idx = mesh.triangles[t];
    const std::array<Vec3, 3> tri{mesh.vertices[idx[0]], mesh.vertices[idx[1]],
                                  mesh.vertices[idx[2]]};
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      const double mn = std::min({tri[0][a], tri[1][a], tri[2][a]});
      const double mx = std::max({tri[0][a], tri[1][a], tri[2][a]});
      // One cell of slack covers faces lying exactly on cell boundaries.
      lo[a] = std::max(0, to_cell(mn) - 1);
      hi[a] = std::min(n - 1, to_cell(mx) + 1);
    }
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          const Vec3 c{voxel_center(x), voxel_center(y), voxel_center(z)};
          if (triangle_box_overlap(c, half, tri)) {
            const std::size_t i = d.index(x, y, z);
            result.surface.set(i, true);
            cell_tris[i].push_back(static_cast<int>(t));
          }
        }
  }

  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++edge_use[{std::min(a, b), std::max(a, b)}];
    }
  result.open_mesh_warning =
      std::any_of(edge_use.begin(), edge_use.end(), [](const auto& e) { return e.second != 2; });

  result.occupancy = exterior_flood_fill(result.surface);
  result.color = ColorVolume(d);

  auto color_at = [&](int tri_index, const Vec3& bary) -> Rgb {
    if (mesh.colors.empty()) return options.default_albedo;
    const auto& t = mesh.triangles[tri_index];
    Rgb c{};
    for (int ch = 0; ch < 3; ++ch) {
      const double v = bary[0] * mesh.colors[t[0]][ch] + bary[1] * mesh.colors[t[1]][ch] +
                       bary[2] * mesh.colors[t[2]][ch];
      c[ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return c;
  };

  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const std::size_t i = d.index(x, y, z);
        if (!result.occupancy[i] || mesh.triangles.empty()) continue;
        const Vec3 p{voxel_center(x), voxel_center(y), voxel_center(z)};
        double best = std::numeric_limits<double>::infinity();
        int best_tri = -1;
        Vec3 best_bary{};
        auto consider = [&](int t) {
          const auto& idx = mesh.triangles[t];
          const std::array<Vec3, 3> tri{mesh.vertices[idx[0]], mesh.vertices[idx[1]],
                                        mesh.vertices[idx[2]]};
          Vec3 bary{};
          const Vec3 q = closest_point_on_triangle(p, tri, bary);
          const Vec3 diff = sub(q, p);
          const double dist = std::sqrt(dot(diff, diff));
          if (dist < best || (dist == best && t < best_tri)) {
            best = dist;
            best_tri = t;
            best_bary = bary;
          }
        };
        // Expanding Chebyshev shells over the cell->triangle buckets. A
        // triangle first seen in shell k+1 is at least (k + 0.5) cells away.
        for (int k = 0; k < n; ++k) {
          for (int dz = -k; dz <= k; ++dz)
            for (int dy = -k; dy <= k; ++dy)
              for (int dx = -k; dx <= k; ++dx) {
                if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != k) continue;
                if (!d.contains(x + dx, y + dy, z + dz)) continue;
                for (int t : cell_tris[d.index(x + dx, y + dy, z + dz)]) consider(t);
              }
          if (best_tri >= 0 && best <= (k + 0.5) * cell) break;
        }
        if (best_tri < 0)
          for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) consider(t);
        result.color.set_rgb(i, color_at(best_tri, best_bary));
      }
  return result;
}

std::pair<VoxelGrid, ColorVolume> apply_mask_removal(const VoxelGrid& v, const ColorVolume& c,
                                                     const DamageMask& m) {
  if (v.dims() != m.dims() || c.dims() != m.dims())
    throw std::invalid_argument("apply_mask_removal: dims mismatch");
  VoxelGrid vo = v;
  ColorVolume co = c;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    vo.set(i, false);
    for (int ch = 0; ch < ColorVolume::kChannels; ++ch) co.at(ch, i) = 0.0F;
  }
  return {std::move(vo), std::move(co)};
}

}  // namespace voxinpaint
