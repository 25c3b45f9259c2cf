// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "voxinpaint/nn/ops.hpp"
#include "voxinpaint/random.hpp"

namespace voxinpaint::nn {

/// Named trainable tensors of one model, in creation order.
template <class T>
class ParameterStore {
 public:
  /// Kaiming-uniform weights, bound sqrt(6 / fan_in).
  Var<T> kaiming(const std::string& name, Shape shape, int fan_in, Rng& rng);
  Var<T> zeros(const std::string& name, Shape shape);
  Var<T> add(const std::string& name, Array<T> value);

  [[nodiscard]] const std::vector<std::pair<std::string, Var<T>>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Var<T>>>& entries() { return entries_; }
  [[nodiscard]] Var<T> find(const std::string& name) const;
  void zero_grad();
  [[nodiscard]] std::size_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Var<T>>> entries_;
};

/// Convolution with kernel k per spatial axis and "same" padding.
template <class T>
struct Conv {
  Var<T> weight;
  Var<T> bias;
  int spatial = 3;
  int padding = 1;

  static Conv make(ParameterStore<T>& store, const std::string& name, int spatial, int in, int out,
                   int kernel, Rng& rng);
  Var<T> operator()(const Var<T>& x) const {
    return spatial == 3 ? conv3d(x, weight, bias, padding) : conv2d(x, weight, bias, padding);
  }
};

template <class T>
struct TransposeConv {
  Var<T> weight;
  Var<T> bias;
  int spatial = 3;

  static TransposeConv make(ParameterStore<T>& store, const std::string& name, int spatial, int in,
                            int out, Rng& rng);
  Var<T> operator()(const Var<T>& x) const {
    return spatial == 3 ? transpose_conv3d(x, weight, bias) : transpose_conv2d(x, weight, bias);
  }
};

template <class T>
struct Linear {
  Var<T> weight;
  Var<T> bias;

  static Linear make(ParameterStore<T>& store, const std::string& name, int in, int out, Rng& rng);
  Var<T> operator()(const Var<T>& x) const { return linear(x, weight, bias); }
};

template <class T>
Var<T> max_pool(const Var<T>& x, int spatial) {
  return spatial == 3 ? max_pool3d(x, 2) : max_pool2d(x, 2);
}

}  // namespace voxinpaint::nn
