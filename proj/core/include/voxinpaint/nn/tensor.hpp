// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace voxinpaint::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Raised when an activation or gradient becomes NaN or infinite. The
/// message names the producing operation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on shape contract violations; the message carries the shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major array; the last axis varies fastest.
template <class T>
struct Array {
  Shape shape;
  std::vector<T> data;

  Array() = default;
  explicit Array(Shape s, T fill = T(0)) : shape(std::move(s)), data(numel(shape), fill) {}
  Array(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != numel(shape))
      throw ShapeError("array: " + std::to_string(data.size()) + " values for shape " +
                       shape_str(shape));
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] int rank() const { return static_cast<int>(shape.size()); }
  [[nodiscard]] int dim(int i) const { return shape.at(i); }
  T* ptr() { return data.data(); }
  [[nodiscard]] const T* ptr() const { return data.data(); }

  template <class U>
  [[nodiscard]] Array<U> cast() const {
    Array<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  friend bool operator==(const Array&, const Array&) = default;
};

/// Throws NumericError if any entry is not finite.
template <class T>
void check_finite(std::span<const T> values, const std::string& op, const char* what);

template <class T>
struct Node {
  Array<T> value;
  Array<T> grad;  // empty until a gradient reaches the node
  bool requires_grad = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  /// Adds `g` into this node's gradient, allocating it on first use.
  void accumulate(std::span<const T> g);
  T* grad_buffer();
};

/// Handle to a value in the computation graph. Copies share the node.
template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Array<T>& value() const { return node_->value; }
  /// Direct access for optimizers and checkpoint loading.
  Array<T>& mutable_value() { return node_->value; }
  [[nodiscard]] const Shape& shape() const { return node_->value.shape; }
  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  [[nodiscard]] bool has_grad() const { return !node_->grad.data.empty(); }
  [[nodiscard]] const Array<T>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Array<T>(); }
  [[nodiscard]] T item() const { return node_->value.data.at(0); }
  [[nodiscard]] const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// While alive on a thread, results on that thread record no graph even when
/// their inputs require gradients. Used for inference and validation.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  static bool active();

 private:
  bool previous_;
};

/// Leaf with gradient tracking (parameters, inputs under test).
template <class T>
Var<T> parameter(Array<T> value);

/// Leaf without gradient tracking.
template <class T>
Var<T> constant(Array<T> value);

/// Builds an interior node. When no parent requires a gradient the result
/// is a constant and `backward` is dropped, so inference keeps no graph.
template <class T>
Var<T> make_result(Array<T> value, std::string op, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward);

/// Reverse-mode sweep from a scalar. Gradients accumulate into every
/// reachable node that requires one.
template <class T>
void backward(const Var<T>& loss);

}  // namespace voxinpaint::nn
