// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace voxinpaint {

namespace {

constexpr std::int64_t kFar = std::numeric_limits<std::int64_t>::max() / 4;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on one line.
// Inputs are exact integers, so the result is exact.
void transform_line(std::vector<std::int64_t>& f, std::vector<int>& v, std::vector<double>& z,
                    std::vector<std::int64_t>& out) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kFar) continue;
    double s = 0;
    while (k >= 0) {
      const int p = v[k];
      s = (static_cast<double>(f[q] + std::int64_t{q} * q) - static_cast<double>(f[p] + std::int64_t{p} * p)) /
          (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -1e300 : s;
    z[k + 1] = 1e300;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kFar);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const std::int64_t d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

NearestIndex::NearestIndex(const VoxelGrid& occupied) : dims_(occupied.dims()) {
  const std::size_t n = dims_.count();
  d2_.assign(n, kFar);
  for (std::size_t i = 0; i < n; ++i)
    if (occupied[i]) {
      d2_[i] = 0;
      empty_ = false;
    }
  if (empty_) return;
  const int len = std::max({dims_.nx, dims_.ny, dims_.nz});
  std::vector<std::int64_t> f, out;
  std::vector<int> v(len);
  std::vector<double> z(len + 1);
  auto pass = [&](int count, int stride, auto&& base_of, int lines) {
    f.resize(count);
    out.resize(count);
    for (int l = 0; l < lines; ++l) {
      const std::size_t base = base_of(l);
      for (int q = 0; q < count; ++q) f[q] = d2_[base + static_cast<std::size_t>(q) * stride];
      transform_line(f, v, z, out);
      for (int q = 0; q < count; ++q) d2_[base + static_cast<std::size_t>(q) * stride] = out[q];
    }
  };
  const int nx = dims_.nx, ny = dims_.ny, nz = dims_.nz;
  pass(nx, 1, [&](int l) { return static_cast<std::size_t>(l) * nx; }, ny * nz);
  pass(ny, nx, [&](int l) { return static_cast<std::size_t>(l % nx) + static_cast<std::size_t>(l / nx) * nx * ny; },
       nx * nz);
  pass(nz, nx * ny, [&](int l) { return static_cast<std::size_t>(l); }, nx * ny);
}

std::int64_t NearestIndex::squared_distance(int x, int y, int z) const {
  if (empty_) throw std::logic_error("nearest index: no occupied voxels");
  return d2_[dims_.index(x, y, z)];
}

double NearestIndex::distance(int x, int y, int z) const {
  return std::sqrt(static_cast<double>(squared_distance(x, y, z)));
}

double directed_mean_distance(const VoxelGrid& from, const NearestIndex& to) {
  const Dims d = from.dims();
  double sum = 0;
  std::size_t count = 0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (from.at(x, y, z)) {
          sum += to.distance(x, y, z);
          ++count;
        }
  if (count == 0) throw std::invalid_argument("directed distance: source set is empty");
  return sum / static_cast<double>(count);
}

double chamfer(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("chamfer: dimensions disagree");
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: undefined for an empty voxel set");
  return directed_mean_distance(a, NearestIndex(b)) + directed_mean_distance(b, NearestIndex(a));
}

GeomReport fscore_at(const VoxelGrid& pred, const VoxelGrid& gt, double threshold) {
  if (pred.dims() != gt.dims()) throw std::invalid_argument("fscore: dimensions disagree");
  GeomReport r;
  r.occupied_pred = pred.count();
  r.occupied_gt = gt.count();
  if (r.occupied_gt == 0) {
    r.diagnostic = "ground truth has no occupied voxels";
    return r;
  }
  if (r.occupied_pred == 0) {
    r.defined = true;
    r.diagnostic = "prediction has no occupied voxels; chamfer undefined";
    return r;
  }
  const NearestIndex to_gt(gt), to_pred(pred);
  const double t2 = threshold * threshold;
  const Dims d = gt.dims();
  std::size_t tp_pred = 0, tp_gt = 0;
  double sum_pred = 0, sum_gt = 0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        if (pred.at(x, y, z)) {
          const auto s = to_gt.squared_distance(x, y, z);
          sum_pred += std::sqrt(static_cast<double>(s));
          if (static_cast<double>(s) <= t2) ++tp_pred;
        }
        if (gt.at(x, y, z)) {
          const auto s = to_pred.squared_distance(x, y, z);
          sum_gt += std::sqrt(static_cast<double>(s));
          if (static_cast<double>(s) <= t2) ++tp_gt;
        }
      }
  r.defined = true;
  r.precision = static_cast<double>(tp_pred) / static_cast<double>(r.occupied_pred);
  r.recall = static_cast<double>(tp_gt) / static_cast<double>(r.occupied_gt);
  r.fscore = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.chamfer_mm = sum_pred / static_cast<double>(r.occupied_pred) + sum_gt / static_cast<double>(r.occupied_gt);
  return r;
}

double psnr_from_mse(double mse) {
  if (!(mse >= 0)) throw std::invalid_argument("psnr: mse must be >= 0");
  if (mse == 0) return kPsnrCapDb;
  return 10.0 * std::log10(1.0 / mse);
}

ColorReport masked_color_metrics(const VoxelGrid& v_hat, const ColorVolume& c_hat, const VoxelGrid& v_gt,
                                 const ColorVolume& c_gt) {
  const Dims d = v_gt.dims();
  if (v_hat.dims() != d || c_hat.dims() != d || c_gt.dims() != d)
    throw std::invalid_argument("color metrics: dimensions disagree");
  ColorReport r;
  r.per_slice_psnr.assign(d.nz, std::numeric_limits<double>::quiet_NaN());
  double total = 0;
  for (int z = 0; z < d.nz; ++z) {
    double slice = 0;
    std::size_t count = 0;
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t i = d.index(x, y, z);
        if (!v_hat[i] || !v_gt[i]) continue;
        for (int c = 0; c < ColorVolume::kChannels; ++c) {
          const double e = static_cast<double>(c_hat.at(c, i)) - static_cast<double>(c_gt.at(c, i));
          slice += e * e;
        }
        ++count;
      }
    if (count > 0) r.per_slice_psnr[z] = psnr_from_mse(slice / (3.0 * static_cast<double>(count)));
    total += slice;
    r.overlap_count += count;
  }
  if (r.overlap_count == 0) {
    r.diagnostic = "prediction and ground truth share no occupied voxels";
    return r;
  }
  r.defined = true;
  r.masked_mse = total / (3.0 * static_cast<double>(r.overlap_count));
  r.psnr_db = psnr_from_mse(r.masked_mse);
  return r;
}

namespace {

std::size_t mirror_index(const Dims& d, std::size_t i, MirrorAxis axis) {
  const int x = static_cast<int>(i % d.nx);
  const int y = static_cast<int>((i / d.nx) % d.ny);
  const int z = static_cast<int>(i / (static_cast<std::size_t>(d.nx) * d.ny));
  return axis == MirrorAxis::kX ? d.index(d.nx - 1 - x, y, z) : d.index(x, d.ny - 1 - y, z);
}

}  // namespace

double mirror_iou(const VoxelGrid& v_dam, const DamageMask& mask, MirrorAxis axis) {
  const Dims d = v_dam.dims();
  if (mask.dims() != d) throw std::invalid_argument("mirror_iou: dimensions disagree");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    const std::size_t m = mirror_index(d, i, axis);
    if (mask[i] || mask[m]) continue;
    const bool a = v_dam[i], b = v_dam[m];
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

SymmetryFill symmetry_baseline(const VoxelGrid& v_dam, const ColorVolume& c_dam, const DamageMask& mask) {
  const Dims d = v_dam.dims();
  if (mask.dims() != d || c_dam.dims() != d) throw std::invalid_argument("symmetry_baseline: dimensions disagree");
  SymmetryFill out;
  const double ix = mirror_iou(v_dam, mask, MirrorAxis::kX);
  const double iy = mirror_iou(v_dam, mask, MirrorAxis::kY);
  out.axis = iy > ix ? MirrorAxis::kY : MirrorAxis::kX;
  out.iou = std::max(ix, iy);

  InpaintResult& r = out.result;
  r.v_hat = v_dam;
  r.c_composed = c_dam;
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (!mask[i]) continue;
    const std::size_t m = mirror_index(d, i, out.axis);
    const bool fill = !mask[m] && v_dam[m];
    r.v_hat.set(i, fill);
    for (int c = 0; c < ColorVolume::kChannels; ++c) r.c_composed.at(c, i) = fill ? c_dam.at(c, m) : 0.0F;
  }
  r.c_hat = r.c_composed;
  restrict_color_to(r.c_hat, r.v_hat);
  return out;
}

}  // namespace voxinpaint
