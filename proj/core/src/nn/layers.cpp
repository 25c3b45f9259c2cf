// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace voxinpaint::nn {

template <class T>
Var<T> ParameterStore<T>::add(const std::string& name, Array<T> value) {
  for (const auto& [existing, v] : entries_)
    if (existing == name) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  Var<T> v = parameter(std::move(value));
  entries_.emplace_back(name, v);
  return v;
}

template <class T>
Var<T> ParameterStore<T>::kaiming(const std::string& name, Shape shape, int fan_in, Rng& rng) {
  Array<T> a(std::move(shape));
  const double bound = std::sqrt(6.0 / std::max(1, fan_in));
  for (T& v : a.data) v = static_cast<T>(rng.uniform(-bound, bound));
  return add(name, std::move(a));
}

template <class T>
Var<T> ParameterStore<T>::zeros(const std::string& name, Shape shape) {
  return add(name, Array<T>(std::move(shape)));
}

template <class T>
Var<T> ParameterStore<T>::find(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  throw std::out_of_range("no parameter named '" + name + "'");
}

template <class T>
void ParameterStore<T>::zero_grad() {
  for (auto& [n, v] : entries_) v.zero_grad();
}

template <class T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t total = 0;
  for (const auto& [n, v] : entries_) total += v.value().size();
  return total;
}

template <class T>
Conv<T> Conv<T>::make(ParameterStore<T>& store, const std::string& name, int spatial, int in, int out,
                      int kernel, Rng& rng) {
  Conv c;
  c.spatial = spatial;
  c.padding = kernel / 2;
  Shape ws{out, in};
  int fan_in = in;
  for (int a = 0; a < spatial; ++a) {
    ws.push_back(kernel);
    fan_in *= kernel;
  }
  c.weight = store.kaiming(name + ".weight", ws, fan_in, rng);
  c.bias = store.zeros(name + ".bias", {out});
  return c;
}

template <class T>
TransposeConv<T> TransposeConv<T>::make(ParameterStore<T>& store, const std::string& name, int spatial,
                                        int in, int out, Rng& rng) {
  TransposeConv c;
  c.spatial = spatial;
  Shape ws{in, out};
  for (int a = 0; a < spatial; ++a) ws.push_back(2);
  // Kernel and stride are both 2, so each output sees exactly `in` inputs.
  c.weight = store.kaiming(name + ".weight", ws, in, rng);
  c.bias = store.zeros(name + ".bias", {out});
  return c;
}

template <class T>
Linear<T> Linear<T>::make(ParameterStore<T>& store, const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.weight = store.kaiming(name + ".weight", {out, in}, in, rng);
  l.bias = store.zeros(name + ".bias", {out});
  return l;
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template struct Conv<float>;
template struct Conv<double>;
template struct TransposeConv<float>;
template struct TransposeConv<double>;
template struct Linear<float>;
template struct Linear<double>;

}  // namespace voxinpaint::nn
