// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

namespace voxinpaint::nn {
namespace {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<Mat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const Mat<T>>;
template <class T>
using StridedMat = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ConstStridedMat = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;

// Upper bound on im2col buffer entries; larger problems are processed in
// chunks of output depth planes.
constexpr std::size_t kMaxColumnEntries = std::size_t{1} << 18;

// Per-thread im2col scratch, reused across calls.
template <class T>
std::vector<T>& scratch(int slot) {
  thread_local std::vector<T> buffers[2];
  return buffers[slot];
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

// Geometry of a stride-1 convolution with 2D treated as depth 1.
struct ConvGeom {
  int n, ci, co, d, h, w, kd, kh, kw, pd, ph, pw, od, oh, ow;
  [[nodiscard]] std::size_t in_plane() const { return static_cast<std::size_t>(d) * h * w; }
  [[nodiscard]] std::size_t out_plane() const { return static_cast<std::size_t>(od) * oh * ow; }
  [[nodiscard]] int taps() const { return kd * kh * kw; }
  [[nodiscard]] int k_rows() const { return ci * taps(); }
  [[nodiscard]] bool pointwise() const {
    return taps() == 1 && pd == 0 && ph == 0 && pw == 0;
  }
};

ConvGeom conv_geom(const Shape& xs, const Shape& ws, int padding, int spatial, const char* op) {
  const std::string both = std::string(op) + ": input " + shape_str(xs) + ", weight " + shape_str(ws);
  require(static_cast<int>(xs.size()) == spatial + 2 && static_cast<int>(ws.size()) == spatial + 2,
          both + " (rank mismatch)");
  require(xs[1] == ws[1], both + " (channel mismatch)");
  require(padding >= 0, both + " (negative padding)");
  ConvGeom g{};
  g.n = xs[0];
  g.ci = xs[1];
  g.co = ws[0];
  if (spatial == 3) {
    g.d = xs[2];
    g.kd = ws[2];
    g.pd = padding;
  } else {
    g.d = 1;
    g.kd = 1;
    g.pd = 0;
  }
  g.h = xs[spatial];
  g.w = xs[spatial + 1];
  g.kh = ws[spatial];
  g.kw = ws[spatial + 1];
  g.ph = g.pw = padding;
  g.od = g.d + 2 * g.pd - g.kd + 1;
  g.oh = g.h + 2 * g.ph - g.kh + 1;
  g.ow = g.w + 2 * g.pw - g.kw + 1;
  require(g.od > 0 && g.oh > 0 && g.ow > 0, both + " (kernel larger than padded input)");
  return g;
}

Shape conv_out_shape(const ConvGeom& g, int spatial) {
  if (spatial == 3) return {g.n, g.co, g.od, g.oh, g.ow};
  return {g.n, g.co, g.oh, g.ow};
}

// cols is row-major (k_rows, planes * oh * ow) for output depth planes
// [od0, od1).
template <class T>
void im2col(const T* x, const ConvGeom& g, int od0, int od1, T* cols) {
  const std::size_t pc = static_cast<std::size_t>(od1 - od0) * g.oh * g.ow;
  for (int ci = 0; ci < g.ci; ++ci)
    for (int a = 0; a < g.kd; ++a)
      for (int b = 0; b < g.kh; ++b)
        for (int c = 0; c < g.kw; ++c) {
          const std::size_t k = ((static_cast<std::size_t>(ci) * g.kd + a) * g.kh + b) * g.kw + c;
          T* row = cols + k * pc;
          const int lo = std::max(0, g.pw - c);
          const int hi = std::min(g.ow, g.w + g.pw - c);
          for (int od = od0; od < od1; ++od) {
            const int id = od + a - g.pd;
            for (int oh = 0; oh < g.oh; ++oh) {
              T* dst = row + (static_cast<std::size_t>(od - od0) * g.oh + oh) * g.ow;
              const int ih = oh + b - g.ph;
              if (id < 0 || id >= g.d || ih < 0 || ih >= g.h || lo >= hi) {
                std::fill(dst, dst + g.ow, T(0));
                continue;
              }
              const T* src = x + ((static_cast<std::size_t>(ci) * g.d + id) * g.h + ih) * g.w;
              std::fill(dst, dst + lo, T(0));
              std::copy(src + lo + c - g.pw, src + hi + c - g.pw, dst + lo);
              std::fill(dst + hi, dst + g.ow, T(0));
            }
          }
        }
}

template <class T>
void col2im_add(const T* cols, const ConvGeom& g, int od0, int od1, T* dx) {
  const std::size_t pc = static_cast<std::size_t>(od1 - od0) * g.oh * g.ow;
  for (int ci = 0; ci < g.ci; ++ci)
    for (int a = 0; a < g.kd; ++a)
      for (int b = 0; b < g.kh; ++b)
        for (int c = 0; c < g.kw; ++c) {
          const std::size_t k = ((static_cast<std::size_t>(ci) * g.kd + a) * g.kh + b) * g.kw + c;
          const T* row = cols + k * pc;
          const int lo = std::max(0, g.pw - c);
          const int hi = std::min(g.ow, g.w + g.pw - c);
          if (lo >= hi) continue;
          for (int od = od0; od < od1; ++od) {
            const int id = od + a - g.pd;
            if (id < 0 || id >= g.d) continue;
            for (int oh = 0; oh < g.oh; ++oh) {
              const int ih = oh + b - g.ph;
              if (ih < 0 || ih >= g.h) continue;
              const T* src = row + (static_cast<std::size_t>(od - od0) * g.oh + oh) * g.ow;
              T* dst = dx + ((static_cast<std::size_t>(ci) * g.d + id) * g.h + ih) * g.w + c - g.pw;
              for (int ow = lo; ow < hi; ++ow) dst[ow] += src[ow];
            }
          }
        }
}

int planes_per_chunk(const ConvGeom& g) {
  const std::size_t per_plane = static_cast<std::size_t>(g.k_rows()) * g.oh * g.ow;
  return static_cast<int>(std::clamp<std::size_t>(kMaxColumnEntries / std::max<std::size_t>(per_plane, 1), 1,
                                                  static_cast<std::size_t>(g.od)));
}

template <class T>
Var<T> conv_nd(const Var<T>& x, const Var<T>& w, const Var<T>& b, int padding, int spatial,
               const char* op) {
  const ConvGeom g = conv_geom(x.shape(), w.shape(), padding, spatial, op);
  if (b.defined())
    require(b.shape() == Shape{g.co}, std::string(op) + ": bias " + shape_str(b.shape()) +
                                          " does not match output channels " + std::to_string(g.co));
  const std::size_t P = g.out_plane();
  const int K = g.k_rows();
  Array<T> y(conv_out_shape(g, spatial));
  ConstMapMat<T> W(w.value().ptr(), g.co, K);
  const int chunk = planes_per_chunk(g);
  std::vector<T>& cols = scratch<T>(0);
  for (int n = 0; n < g.n; ++n) {
    const T* xn = x.value().ptr() + static_cast<std::size_t>(n) * g.ci * g.in_plane();
    T* yn = y.ptr() + static_cast<std::size_t>(n) * g.co * P;
    if (g.pointwise()) {
      MapMat<T>(yn, g.co, static_cast<Eigen::Index>(P)).noalias() =
          W * ConstMapMat<T>(xn, g.ci, static_cast<Eigen::Index>(P));
    } else {
      for (int od0 = 0; od0 < g.od; od0 += chunk) {
        const int od1 = std::min(g.od, od0 + chunk);
        const std::size_t pc = static_cast<std::size_t>(od1 - od0) * g.oh * g.ow;
        cols.resize(static_cast<std::size_t>(K) * pc);
        im2col(xn, g, od0, od1, cols.data());
        StridedMat<T>(yn + static_cast<std::size_t>(od0) * g.oh * g.ow, g.co,
                      static_cast<Eigen::Index>(pc), Eigen::OuterStride<>(static_cast<Eigen::Index>(P)))
            .noalias() = W * ConstMapMat<T>(cols.data(), K, static_cast<Eigen::Index>(pc));
      }
    }
    if (b.defined())
      for (int co = 0; co < g.co; ++co) {
        const T bias = b.value().data[co];
        T* row = yn + static_cast<std::size_t>(co) * P;
        for (std::size_t p = 0; p < P; ++p) row[p] += bias;
      }
  }

  const bool has_bias = b.defined();
  return make_result<T>(std::move(y), op, {x, w, b}, [g, K, P, chunk, has_bias](Node<T>& self) {
    Node<T>& xn_node = *self.parents[0];
    Node<T>& w_node = *self.parents[1];
    const T* gy = self.grad.ptr();
    ConstMapMat<T> W(w_node.value.ptr(), g.co, K);
    Mat<T> dW = Mat<T>::Zero(g.co, K);
    T* dx = xn_node.requires_grad ? xn_node.grad_buffer() : nullptr;
    std::vector<T>& cols = scratch<T>(0);
    std::vector<T>& dcols = scratch<T>(1);
    for (int n = 0; n < g.n; ++n) {
      const T* xn = xn_node.value.ptr() + static_cast<std::size_t>(n) * g.ci * g.in_plane();
      const T* gn = gy + static_cast<std::size_t>(n) * g.co * P;
      T* dxn = dx ? dx + static_cast<std::size_t>(n) * g.ci * g.in_plane() : nullptr;
      if (g.pointwise()) {
        ConstMapMat<T> G(gn, g.co, static_cast<Eigen::Index>(P));
        ConstMapMat<T> X(xn, g.ci, static_cast<Eigen::Index>(P));
        if (w_node.requires_grad) dW.noalias() += G * X.transpose();
        if (dxn) MapMat<T>(dxn, g.ci, static_cast<Eigen::Index>(P)).noalias() += W.transpose() * G;
        continue;
      }
      for (int od0 = 0; od0 < g.od; od0 += chunk) {
        const int od1 = std::min(g.od, od0 + chunk);
        const std::size_t pc = static_cast<std::size_t>(od1 - od0) * g.oh * g.ow;
        ConstStridedMat<T> G(gn + static_cast<std::size_t>(od0) * g.oh * g.ow, g.co,
                             static_cast<Eigen::Index>(pc), Eigen::OuterStride<>(static_cast<Eigen::Index>(P)));
        if (w_node.requires_grad) {
          cols.resize(static_cast<std::size_t>(K) * pc);
          im2col(xn, g, od0, od1, cols.data());
          dW.noalias() += G * ConstMapMat<T>(cols.data(), K, static_cast<Eigen::Index>(pc)).transpose();
        }
        if (dxn) {
          dcols.resize(static_cast<std::size_t>(K) * pc);
          MapMat<T>(dcols.data(), K, static_cast<Eigen::Index>(pc)).noalias() = W.transpose() * G;
          col2im_add(dcols.data(), g, od0, od1, dxn);
        }
      }
    }
    if (w_node.requires_grad) w_node.accumulate({dW.data(), static_cast<std::size_t>(dW.size())});
    if (has_bias) {
      Node<T>& b_node = *self.parents[2];
      std::vector<T> db(g.co, T(0));
      for (int n = 0; n < g.n; ++n)
        for (int co = 0; co < g.co; ++co) {
          const T* row = gy + (static_cast<std::size_t>(n) * g.co + co) * P;
          double s = 0.0;
          for (std::size_t p = 0; p < P; ++p) s += row[p];
          db[co] += static_cast<T>(s);
        }
      b_node.accumulate(db);
    }
  });
}

template <class T>
Var<T> max_pool_nd(const Var<T>& x, int window, int spatial, const char* op) {
  const Shape& s = x.shape();
  require(static_cast<int>(s.size()) == spatial + 2, std::string(op) + ": bad input rank " + shape_str(s));
  require(window >= 1, std::string(op) + ": window must be positive");
  for (int a = 2; a < spatial + 2; ++a)
    require(s[a] % window == 0, std::string(op) + ": spatial dims of " + shape_str(s) +
                                    " not divisible by window " + std::to_string(window));
  const int n = s[0], c = s[1];
  const int d = spatial == 3 ? s[2] : 1;
  const int h = s[spatial], w = s[spatial + 1];
  const int wd = spatial == 3 ? window : 1;
  const int od = d / wd, oh = h / window, ow = w / window;
  Shape out_shape = spatial == 3 ? Shape{n, c, od, oh, ow} : Shape{n, c, oh, ow};
  Array<T> y(out_shape);
  auto argmax = std::make_shared<std::vector<std::size_t>>(y.size());
  const T* xv = x.value().ptr();
  std::size_t o = 0;
  for (int nc = 0; nc < n * c; ++nc) {
    const std::size_t base = static_cast<std::size_t>(nc) * d * h * w;
    for (int z = 0; z < od; ++z)
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx, ++o) {
          std::size_t best = base + (static_cast<std::size_t>(z * wd) * h + yy * window) * w + xx * window;
          for (int a = 0; a < wd; ++a)
            for (int b = 0; b < window; ++b)
              for (int e = 0; e < window; ++e) {
                const std::size_t i =
                    base + (static_cast<std::size_t>(z * wd + a) * h + yy * window + b) * w + xx * window + e;
                if (xv[i] > xv[best]) best = i;
              }
          (*argmax)[o] = best;
          y.data[o] = xv[best];
        }
  }
  return make_result<T>(std::move(y), op, {x}, [argmax](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    const T* g = self.grad.ptr();
    for (std::size_t i = 0; i < argmax->size(); ++i) dx[(*argmax)[i]] += g[i];
  });
}

template <class T>
Var<T> transpose_conv_nd(const Var<T>& x, const Var<T>& w, const Var<T>& b, int spatial, const char* op) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const std::string both = std::string(op) + ": input " + shape_str(xs) + ", weight " + shape_str(ws);
  require(static_cast<int>(xs.size()) == spatial + 2 && static_cast<int>(ws.size()) == spatial + 2,
          both + " (rank mismatch)");
  require(xs[1] == ws[0], both + " (channel mismatch)");
  for (int a = 2; a < spatial + 2; ++a) require(ws[a] == 2, both + " (kernel must be 2 per axis)");
  const int n = xs[0], ci = xs[1], co = ws[1];
  if (b.defined()) require(b.shape() == Shape{co}, both + " (bias shape " + shape_str(b.shape()) + ")");
  const int d = spatial == 3 ? xs[2] : 1;
  const int h = xs[spatial], wd = xs[spatial + 1];
  const int fd = spatial == 3 ? 2 : 1;
  const int G = fd * 4;
  const std::size_t P = static_cast<std::size_t>(d) * h * wd;
  const int D2 = d * fd, H2 = h * 2, W2 = wd * 2;
  const std::size_t P2 = static_cast<std::size_t>(D2) * H2 * W2;
  Array<T> y(spatial == 3 ? Shape{n, co, D2, H2, W2} : Shape{n, co, H2, W2});

  // Output position of input p under kernel tap t.
  auto out_index = [=](std::size_t p, int t) {
    const int z = static_cast<int>(p / (static_cast<std::size_t>(h) * wd));
    const int yy = static_cast<int>((p / wd) % h);
    const int xx = static_cast<int>(p % wd);
    const int a = t / 4, bb = (t / 2) % 2, e = t % 2;
    return (static_cast<std::size_t>(z * fd + a) * H2 + yy * 2 + bb) * W2 + xx * 2 + e;
  };

  ConstMapMat<T> Wm(w.value().ptr(), ci, co * G);
  Mat<T> Z(co * G, static_cast<Eigen::Index>(P));
  for (int in = 0; in < n; ++in) {
    const T* xn = x.value().ptr() + static_cast<std::size_t>(in) * ci * P;
    Z.noalias() = Wm.transpose() * ConstMapMat<T>(xn, ci, static_cast<Eigen::Index>(P));
    T* yn = y.ptr() + static_cast<std::size_t>(in) * co * P2;
    for (int oc = 0; oc < co; ++oc) {
      const T bias = b.defined() ? b.value().data[oc] : T(0);
      for (int t = 0; t < G; ++t)
        for (std::size_t p = 0; p < P; ++p)
          yn[static_cast<std::size_t>(oc) * P2 + out_index(p, t)] = Z(oc * G + t, static_cast<Eigen::Index>(p)) + bias;
    }
  }

  const bool has_bias = b.defined();
  return make_result<T>(std::move(y), op, {x, w, b}, [=](Node<T>& self) {
    Node<T>& x_node = *self.parents[0];
    Node<T>& w_node = *self.parents[1];
    ConstMapMat<T> Wmat(w_node.value.ptr(), ci, co * G);
    Mat<T> dZ(co * G, static_cast<Eigen::Index>(P));
    Mat<T> dW = Mat<T>::Zero(ci, co * G);
    std::vector<T> db(co, T(0));
    T* dx = x_node.requires_grad ? x_node.grad_buffer() : nullptr;
    for (int in = 0; in < n; ++in) {
      const T* gn = self.grad.ptr() + static_cast<std::size_t>(in) * co * P2;
      for (int oc = 0; oc < co; ++oc) {
        double bsum = 0.0;
        for (int t = 0; t < G; ++t)
          for (std::size_t p = 0; p < P; ++p) {
            const T gv = gn[static_cast<std::size_t>(oc) * P2 + out_index(p, t)];
            dZ(oc * G + t, static_cast<Eigen::Index>(p)) = gv;
            bsum += gv;
          }
        db[oc] += static_cast<T>(bsum);
      }
      const T* xn = x_node.value.ptr() + static_cast<std::size_t>(in) * ci * P;
      if (w_node.requires_grad)
        dW.noalias() += ConstMapMat<T>(xn, ci, static_cast<Eigen::Index>(P)) * dZ.transpose();
      if (dx)
        MapMat<T>(dx + static_cast<std::size_t>(in) * ci * P, ci, static_cast<Eigen::Index>(P)).noalias() +=
            Wmat * dZ;
    }
    if (w_node.requires_grad) w_node.accumulate({dW.data(), static_cast<std::size_t>(dW.size())});
    if (has_bias) self.parents[2]->accumulate(db);
  });
}

template <class T>
void require_same(const Shape& a, const Shape& b, const char* op) {
  require(a == b, std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) + " differ");
}

template <class T>
Var<T> scalar_result(double value, const char* op, std::vector<Var<T>> parents,
                     std::function<void(Node<T>&)> fn) {
  return make_result<T>(Array<T>({1}, {static_cast<T>(value)}), op, std::move(parents), std::move(fn));
}

}  // namespace

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int padding) {
  return conv_nd(x, w, b, padding, 2, "conv2d");
}

template <class T>
Var<T> conv3d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int padding) {
  return conv_nd(x, w, b, padding, 3, "conv3d");
}

template <class T>
Var<T> max_pool2d(const Var<T>& x, int window) {
  return max_pool_nd(x, window, 2, "max_pool2d");
}

template <class T>
Var<T> max_pool3d(const Var<T>& x, int window) {
  return max_pool_nd(x, window, 3, "max_pool3d");
}

template <class T>
Var<T> avg_pool2d(const Var<T>& x, int window) {
  const Shape& s = x.shape();
  require(s.size() == 4, "avg_pool2d: bad input rank " + shape_str(s));
  require(window >= 1 && s[2] % window == 0 && s[3] % window == 0,
          "avg_pool2d: spatial dims of " + shape_str(s) + " not divisible by window " + std::to_string(window));
  const int nc = s[0] * s[1], h = s[2], w = s[3], oh = h / window, ow = w / window;
  Array<T> y({s[0], s[1], oh, ow});
  const T inv = T(1) / static_cast<T>(window * window);
  const T* xv = x.value().ptr();
  for (int p = 0; p < nc; ++p)
    for (int yy = 0; yy < oh; ++yy)
      for (int xx = 0; xx < ow; ++xx) {
        T acc = 0;
        for (int b = 0; b < window; ++b)
          for (int e = 0; e < window; ++e)
            acc += xv[(static_cast<std::size_t>(p) * h + yy * window + b) * w + xx * window + e];
        y.data[(static_cast<std::size_t>(p) * oh + yy) * ow + xx] = acc * inv;
      }
  return make_result<T>(std::move(y), "avg_pool2d", {x}, [=](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    const T* g = self.grad.ptr();
    for (int p = 0; p < nc; ++p)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          dx[(static_cast<std::size_t>(p) * h + yy) * w + xx] +=
              g[(static_cast<std::size_t>(p) * oh + yy / window) * ow + xx / window] * inv;
  });
}

template <class T>
Var<T> transpose_conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  return transpose_conv_nd(x, w, b, 2, "transpose_conv2d");
}

template <class T>
Var<T> transpose_conv3d(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  return transpose_conv_nd(x, w, b, 3, "transpose_conv3d");
}

template <class T>
Var<T> relu(const Var<T>& x) {
  Array<T> y = x.value();
  for (T& v : y.data) v = v > T(0) ? v : T(0);
  return make_result<T>(std::move(y), "relu", {x}, [](Node<T>& self) {
    const auto& in = self.parents[0]->value.data;
    T* dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < in.size(); ++i)
      if (in[i] > T(0)) dx[i] += self.grad.data[i];
  });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  Array<T> y = x.value();
  for (T& v : y.data) v = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  return make_result<T>(std::move(y), "sigmoid", {x}, [](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const T s = self.value.data[i];
      dx[i] += self.grad.data[i] * s * (T(1) - s);
    }
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same<T>(a.shape(), b.shape(), "add");
  Array<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += b.value().data[i];
  const bool a_grad = a.requires_grad();
  const bool b_grad = b.requires_grad();
  return make_result<T>(std::move(y), "add", {a, b}, [a_grad, b_grad](Node<T>& self) {
    std::size_t k = 0;
    if (a_grad) self.parents[k++]->accumulate(self.grad.data);
    else ++k;
    if (b_grad) self.parents[k]->accumulate(self.grad.data);
  });
}

template <class T>
Var<T> add_const(const Var<T>& x, const Array<T>& c) {
  require_same<T>(x.shape(), c.shape, "add_const");
  Array<T> y = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += c.data[i];
  return make_result<T>(std::move(y), "add_const", {x},
                        [](Node<T>& self) { self.parents[0]->accumulate(self.grad.data); });
}

template <class T>
Var<T> mul_const(const Var<T>& x, const Array<T>& c) {
  require_same<T>(x.shape(), c.shape, "mul_const");
  Array<T> y = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= c.data[i];
  auto factor = std::make_shared<Array<T>>(c);
  return make_result<T>(std::move(y), "mul_const", {x}, [factor](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad.data[i] * factor->data[i];
  });
}

template <class T>
Var<T> scale(const Var<T>& x, T s) {
  Array<T> y = x.value();
  for (T& v : y.data) v *= s;
  return make_result<T>(std::move(y), "scale", {x}, [s](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad.data[i] * s;
  });
}

template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  bool ok = as.size() >= 2 && as.size() == bs.size() && as[0] == bs[0];
  for (std::size_t i = 2; ok && i < as.size(); ++i) ok = as[i] == bs[i];
  require(ok, "concat_channels: shapes " + shape_str(as) + " and " + shape_str(bs) + " incompatible");
  const int n = as[0];
  const std::size_t plane = numel(as) / (static_cast<std::size_t>(as[0]) * as[1]);
  const std::size_t ca = static_cast<std::size_t>(as[1]) * plane;
  const std::size_t cb = static_cast<std::size_t>(bs[1]) * plane;
  Shape ys = as;
  ys[1] = as[1] + bs[1];
  Array<T> y(ys);
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.value().ptr() + i * ca, ca, y.ptr() + i * (ca + cb));
    std::copy_n(b.value().ptr() + i * cb, cb, y.ptr() + i * (ca + cb) + ca);
  }
  const bool a_grad = a.requires_grad();
  const bool b_grad = b.requires_grad();
  return make_result<T>(std::move(y), "concat_channels", {a, b}, [=](Node<T>& self) {
    std::size_t k = 0;
    Node<T>* pa = a_grad ? self.parents[k++].get() : (++k, nullptr);
    Node<T>* pb = b_grad ? self.parents[k].get() : nullptr;
    T* da = pa ? pa->grad_buffer() : nullptr;
    T* db = pb ? pb->grad_buffer() : nullptr;
    for (int i = 0; i < n; ++i) {
      const T* g = self.grad.ptr() + i * (ca + cb);
      if (da)
        for (std::size_t j = 0; j < ca; ++j) da[i * ca + j] += g[j];
      if (db)
        for (std::size_t j = 0; j < cb; ++j) db[i * cb + j] += g[ca + j];
    }
  });
}

template <class T>
Var<T> add_channel_vector(const Var<T>& x, const Var<T>& v) {
  const Shape& xs = x.shape();
  require(xs.size() >= 2 && v.shape() == Shape{xs[0], xs[1]},
          "add_channel_vector: input " + shape_str(xs) + ", vector " + shape_str(v.shape()));
  const std::size_t nc = static_cast<std::size_t>(xs[0]) * xs[1];
  const std::size_t plane = numel(xs) / nc;
  Array<T> y = x.value();
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t p = 0; p < plane; ++p) y.data[i * plane + p] += v.value().data[i];
  const bool x_grad = x.requires_grad();
  const bool v_grad = v.requires_grad();
  return make_result<T>(std::move(y), "add_channel_vector", {x, v}, [=](Node<T>& self) {
    std::size_t k = 0;
    if (x_grad) self.parents[k++]->accumulate(self.grad.data);
    else ++k;
    if (!v_grad) return;
    std::vector<T> dv(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      double s = 0.0;
      for (std::size_t p = 0; p < plane; ++p) s += self.grad.data[i * plane + p];
      dv[i] = static_cast<T>(s);
    }
    self.parents[k]->accumulate(dv);
  });
}

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  require(xs.size() == 2 && ws.size() == 2 && xs[1] == ws[1],
          "linear: input " + shape_str(xs) + ", weight " + shape_str(ws));
  if (b.defined()) require(b.shape() == Shape{ws[0]}, "linear: bias " + shape_str(b.shape()));
  const int n = xs[0], in = xs[1], out = ws[0];
  Array<T> y({n, out});
  ConstMapMat<T> X(x.value().ptr(), n, in);
  ConstMapMat<T> W(w.value().ptr(), out, in);
  MapMat<T>(y.ptr(), n, out).noalias() = X * W.transpose();
  if (b.defined())
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < out; ++o) y.data[static_cast<std::size_t>(i) * out + o] += b.value().data[o];
  const bool has_bias = b.defined();
  return make_result<T>(std::move(y), "linear", {x, w, b}, [=](Node<T>& self) {
    Node<T>& xn = *self.parents[0];
    Node<T>& wn = *self.parents[1];
    ConstMapMat<T> G(self.grad.ptr(), n, out);
    if (xn.requires_grad)
      MapMat<T>(xn.grad_buffer(), n, in).noalias() += G * ConstMapMat<T>(wn.value.ptr(), out, in);
    if (wn.requires_grad)
      MapMat<T>(wn.grad_buffer(), out, in).noalias() += G.transpose() * ConstMapMat<T>(xn.value.ptr(), n, in);
    if (has_bias) {
      std::vector<T> db(out, T(0));
      for (int i = 0; i < n; ++i)
        for (int o = 0; o < out; ++o) db[o] += self.grad.data[static_cast<std::size_t>(i) * out + o];
      self.parents[2]->accumulate(db);
    }
  });
}

template <class T>
Var<T> axial_slices(const Var<T>& x) {
  const Shape& s = x.shape();
  require(s.size() == 5, "axial_slices: expected (N,C,D,H,W), got " + shape_str(s));
  const int n = s[0], c = s[1], d = s[2];
  const std::size_t hw = static_cast<std::size_t>(s[3]) * s[4];
  Array<T> y({n * d, c, s[3], s[4]});
  // Maps a flat input plane (n, c, z) to its output plane (n*d + z, c).
  auto dst_plane = [=](int i, int ch, int z) {
    return (static_cast<std::size_t>(i * d + z) * c + ch) * hw;
  };
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch)
      for (int z = 0; z < d; ++z)
        std::copy_n(x.value().ptr() + ((static_cast<std::size_t>(i) * c + ch) * d + z) * hw, hw,
                    y.ptr() + dst_plane(i, ch, z));
  return make_result<T>(std::move(y), "axial_slices", {x}, [=](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch)
        for (int z = 0; z < d; ++z) {
          const T* g = self.grad.ptr() + dst_plane(i, ch, z);
          T* dst = dx + ((static_cast<std::size_t>(i) * c + ch) * d + z) * hw;
          for (std::size_t p = 0; p < hw; ++p) dst[p] += g[p];
        }
  });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  double s = 0.0;
  for (T v : x.value().data) s += v;
  return scalar_result<T>(s, "sum", {x}, [](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    const T g = self.grad.data[0];
    for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) dx[i] += g;
  });
}

template <class T>
Var<T> mean(const Var<T>& x) {
  const std::size_t n = x.value().size();
  require(n > 0, "mean: empty input");
  return scale(sum(x), static_cast<T>(1.0 / static_cast<double>(n)));
}

template <class T>
Var<T> bce(const Var<T>& p, const Array<T>& t, double eps) {
  require_same<T>(p.shape(), t.shape, "bce");
  const std::size_t n = t.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = std::clamp(static_cast<double>(p.value().data[i]), eps, 1.0 - eps);
    const double y = t.data[i];
    s -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
  }
  auto target = std::make_shared<Array<T>>(t);
  return scalar_result<T>(s / static_cast<double>(n), "bce", {p}, [target, eps, n](Node<T>& self) {
    Node<T>& pn = *self.parents[0];
    T* dp = pn.grad_buffer();
    const double g = static_cast<double>(self.grad.data[0]) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double q = pn.value.data[i];
      if (q < eps || q > 1.0 - eps) continue;
      const double y = target->data[i];
      dp[i] += static_cast<T>(g * (-y / q + (1.0 - y) / (1.0 - q)));
    }
  });
}

template <class T>
Var<T> bce_with_logits(const Var<T>& logits, const Array<T>& t) {
  require_same<T>(logits.shape(), t.shape, "bce_with_logits");
  const std::size_t n = t.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = logits.value().data[i];
    s += std::max(x, 0.0) - x * t.data[i] + std::log1p(std::exp(-std::abs(x)));
  }
  auto target = std::make_shared<Array<T>>(t);
  return scalar_result<T>(s / static_cast<double>(n), "bce_with_logits", {logits}, [target, n](Node<T>& self) {
    Node<T>& xn = *self.parents[0];
    T* dx = xn.grad_buffer();
    const double g = static_cast<double>(self.grad.data[0]) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = xn.value.data[i];
      const double sg = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      dx[i] += static_cast<T>(g * (sg - target->data[i]));
    }
  });
}

template <class T>
Var<T> l1_masked(const Var<T>& pred, const Array<T>& target, const Array<T>& mask) {
  require_same<T>(pred.shape(), target.shape, "l1_masked");
  require_same<T>(pred.shape(), mask.shape, "l1_masked");
  double s = 0.0, count = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    count += mask.data[i];
    if (mask.data[i] != T(0)) s += std::abs(static_cast<double>(pred.value().data[i]) - target.data[i]) * mask.data[i];
  }
  const double denom = std::max(1.0, count);
  auto tgt = std::make_shared<Array<T>>(target);
  auto msk = std::make_shared<Array<T>>(mask);
  return scalar_result<T>(s / denom, "l1_masked", {pred}, [tgt, msk, denom](Node<T>& self) {
    Node<T>& pn = *self.parents[0];
    T* dp = pn.grad_buffer();
    const double g = static_cast<double>(self.grad.data[0]) / denom;
    for (std::size_t i = 0; i < msk->size(); ++i) {
      if (msk->data[i] == T(0)) continue;
      const double diff = static_cast<double>(pn.value.data[i]) - tgt->data[i];
      const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      dp[i] += static_cast<T>(g * sgn * msk->data[i]);
    }
  });
}

template <class T>
Var<T> mse(const Var<T>& pred, const Array<T>& target) {
  require_same<T>(pred.shape(), target.shape, "mse");
  const std::size_t n = target.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = static_cast<double>(pred.value().data[i]) - target.data[i];
    s += diff * diff;
  }
  auto tgt = std::make_shared<Array<T>>(target);
  return scalar_result<T>(s / static_cast<double>(n), "mse", {pred}, [tgt, n](Node<T>& self) {
    Node<T>& pn = *self.parents[0];
    T* dp = pn.grad_buffer();
    const double g = 2.0 * static_cast<double>(self.grad.data[0]) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      dp[i] += static_cast<T>(g * (static_cast<double>(pn.value.data[i]) - tgt->data[i]));
  });
}

template <class T>
Var<T> mse_masked(const Var<T>& pred, const Array<T>& target, const Array<T>& mask) {
  require_same<T>(pred.shape(), target.shape, "mse_masked");
  require_same<T>(pred.shape(), mask.shape, "mse_masked");
  double s = 0.0, count = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    count += mask.data[i];
    const double diff = static_cast<double>(pred.value().data[i]) - target.data[i];
    s += mask.data[i] * diff * diff;
  }
  const double denom = std::max(1.0, count);
  auto tgt = std::make_shared<Array<T>>(target);
  auto msk = std::make_shared<Array<T>>(mask);
  return scalar_result<T>(s / denom, "mse_masked", {pred}, [tgt, msk, denom](Node<T>& self) {
    Node<T>& pn = *self.parents[0];
    T* dp = pn.grad_buffer();
    const double g = 2.0 * static_cast<double>(self.grad.data[0]) / denom;
    for (std::size_t i = 0; i < msk->size(); ++i)
      if (msk->data[i] != T(0))
        dp[i] += static_cast<T>(g * msk->data[i] * (static_cast<double>(pn.value.data[i]) - tgt->data[i]));
  });
}

template <class T>
Var<T> color_prior(const Var<T>& x, const Array<T>& support, const std::array<double, 3>& palette) {
  const Shape& xs = x.shape();
  require(xs.size() >= 2 && xs[1] == 3, "color_prior: expected (N,3,...), got " + shape_str(xs));
  Shape ss = xs;
  ss[1] = 1;
  require(support.shape == ss, "color_prior: support " + shape_str(support.shape) + " for input " + shape_str(xs));
  const int n = xs[0];
  const std::size_t plane = numel(xs) / (static_cast<std::size_t>(n) * 3);
  // Per item: support count and mean residual (mean - palette) per channel.
  auto stats = std::make_shared<std::vector<std::array<double, 4>>>(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const T* s = support.ptr() + static_cast<std::size_t>(i) * plane;
    double count = 0.0;
    for (std::size_t p = 0; p < plane; ++p) count += s[p];
    auto& st = (*stats)[i];
    st[3] = count;
    if (count <= 0.0) {
      st[0] = st[1] = st[2] = 0.0;
      continue;
    }
    for (int c = 0; c < 3; ++c) {
      const T* xv = x.value().ptr() + (static_cast<std::size_t>(i) * 3 + c) * plane;
      double acc = 0.0;
      for (std::size_t p = 0; p < plane; ++p) acc += static_cast<double>(xv[p]) * s[p];
      st[c] = acc / count - palette[c];
      total += st[c] * st[c];
    }
  }
  auto sup = std::make_shared<Array<T>>(support);
  return scalar_result<T>(total / n, "color_prior", {x}, [stats, sup, n, plane](Node<T>& self) {
    T* dx = self.parents[0]->grad_buffer();
    const double g = static_cast<double>(self.grad.data[0]) / n;
    for (int i = 0; i < n; ++i) {
      const auto& st = (*stats)[i];
      if (st[3] <= 0.0) continue;
      const T* s = sup->ptr() + static_cast<std::size_t>(i) * plane;
      for (int c = 0; c < 3; ++c) {
        const double k = g * 2.0 * st[c] / st[3];
        T* d = dx + (static_cast<std::size_t>(i) * 3 + c) * plane;
        for (std::size_t p = 0; p < plane; ++p) d[p] += static_cast<T>(k * s[p]);
      }
    }
  });
}

template <class T>
Array<T> sinusoidal_embedding(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0)
    throw std::invalid_argument("sinusoidal_embedding: dim must be positive and even, got " + std::to_string(dim));
  if (t < 0) throw std::invalid_argument("sinusoidal_embedding: negative timestep");
  Array<T> e({dim});
  for (int i = 0; i < dim / 2; ++i) {
    const double omega = std::pow(10000.0, -2.0 * i / dim);
    e.data[2 * i] = static_cast<T>(std::sin(t * omega));
    e.data[2 * i + 1] = static_cast<T>(std::cos(t * omega));
  }
  return e;
}

template <class T>
Array<T> sinusoidal_embedding(const std::vector<int>& ts, int dim) {
  Array<T> out({static_cast<int>(ts.size()), dim});
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Array<T> e = sinusoidal_embedding<T>(ts[i], dim);
    std::copy(e.data.begin(), e.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return out;
}

template <class T>
Array<T> repeat_channels(const Array<T>& a, int channels) {
  if (a.rank() < 2 || a.shape[1] != 1)
    throw ShapeError("repeat_channels: expected (N,1,...), got " + shape_str(a.shape));
  Shape s = a.shape;
  s[1] = channels;
  Array<T> out(s);
  const std::size_t plane = a.size() / a.shape[0];
  for (int i = 0; i < a.shape[0]; ++i)
    for (int c = 0; c < channels; ++c)
      std::copy_n(a.ptr() + i * plane, plane, out.ptr() + (static_cast<std::size_t>(i) * channels + c) * plane);
  return out;
}

#define VOXINPAINT_INSTANTIATE(T)                                                                  \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int);                     \
  template Var<T> conv3d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int);                     \
  template Var<T> max_pool2d<T>(const Var<T>&, int);                                               \
  template Var<T> max_pool3d<T>(const Var<T>&, int);                                               \
  template Var<T> avg_pool2d<T>(const Var<T>&, int);                                               \
  template Var<T> transpose_conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&);                \
  template Var<T> transpose_conv3d<T>(const Var<T>&, const Var<T>&, const Var<T>&);                \
  template Var<T> relu<T>(const Var<T>&);                                                          \
  template Var<T> sigmoid<T>(const Var<T>&);                                                       \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                            \
  template Var<T> add_const<T>(const Var<T>&, const Array<T>&);                                    \
  template Var<T> mul_const<T>(const Var<T>&, const Array<T>&);                                    \
  template Var<T> scale<T>(const Var<T>&, T);                                                      \
  template Var<T> concat_channels<T>(const Var<T>&, const Var<T>&);                                \
  template Var<T> add_channel_vector<T>(const Var<T>&, const Var<T>&);                             \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                          \
  template Var<T> axial_slices<T>(const Var<T>&);                                                  \
  template Var<T> sum<T>(const Var<T>&);                                                           \
  template Var<T> mean<T>(const Var<T>&);                                                          \
  template Var<T> bce<T>(const Var<T>&, const Array<T>&, double);                                  \
  template Var<T> bce_with_logits<T>(const Var<T>&, const Array<T>&);                              \
  template Var<T> l1_masked<T>(const Var<T>&, const Array<T>&, const Array<T>&);                   \
  template Var<T> mse<T>(const Var<T>&, const Array<T>&);                                          \
  template Var<T> mse_masked<T>(const Var<T>&, const Array<T>&, const Array<T>&);                  \
  template Var<T> color_prior<T>(const Var<T>&, const Array<T>&, const std::array<double, 3>&);    \
  template Array<T> sinusoidal_embedding<T>(int, int);                                             \
  template Array<T> sinusoidal_embedding<T>(const std::vector<int>&, int);                         \
  template Array<T> repeat_channels<T>(const Array<T>&, int);

VOXINPAINT_INSTANTIATE(float)
VOXINPAINT_INSTANTIATE(double)
#undef VOXINPAINT_INSTANTIATE

}  // namespace voxinpaint::nn
