// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/nn/tensor.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace voxinpaint::nn {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

template <class T>
void check_finite(std::span<const T> values, const std::string& op, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw NumericError("non-finite " + std::string(what) + " produced by '" + op +
                         "' at flat index " + std::to_string(i));
}

template <class T>
void Node<T>::accumulate(std::span<const T> g) {
  if (!requires_grad) return;
  if (g.size() != value.size())
    throw ShapeError("gradient of size " + std::to_string(g.size()) + " for '" + op +
                     "' with shape " + shape_str(value.shape));
  if (grad.data.empty()) {
    grad = Array<T>(value.shape);
  }
  T* dst = grad.ptr();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

template <class T>
T* Node<T>::grad_buffer() {
  if (grad.data.empty()) grad = Array<T>(value.shape);
  return grad.ptr();
}

template <class T>
Var<T> parameter(Array<T> value) {
  auto node = std::make_shared<Node<T>>();
  check_finite<T>(value.data, "parameter", "value");
  node->value = std::move(value);
  node->requires_grad = true;
  node->op = "parameter";
  return Var<T>(std::move(node));
}

template <class T>
Var<T> constant(Array<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = "constant";
  return Var<T>(std::move(node));
}

namespace {
thread_local bool g_no_grad = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

template <class T>
Var<T> make_result(Array<T> value, std::string op, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward_fn) {
  check_finite<T>(value.data, op, "activation");
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = std::move(op);
  if (!g_no_grad)
    for (const auto& p : parents)
      if (p.defined() && p.requires_grad()) node->requires_grad = true;
  if (node->requires_grad) {
    for (auto& p : parents)
      if (p.defined()) node->parents.push_back(p.node());
    node->backward = std::move(backward_fn);
  }
  return Var<T>(std::move(node));
}

template <class T>
void backward(const Var<T>& loss) {
  if (!loss.defined() || loss.value().size() != 1)
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  Node<T>* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the graph.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->backward || node->grad.data.empty()) continue;
    node->backward(*node);
    for (const auto& p : node->parents)
      if (!p->grad.data.empty()) check_finite<T>(p->grad.data, node->op, "gradient");
  }
}

#define VOXINPAINT_INSTANTIATE(T)                                                          \
  template void check_finite<T>(std::span<const T>, const std::string&, const char*);     \
  template struct Node<T>;                                                                 \
  template Var<T> parameter<T>(Array<T>);                                                  \
  template Var<T> constant<T>(Array<T>);                                                   \
  template Var<T> make_result<T>(Array<T>, std::string, std::vector<Var<T>>,              \
                                 std::function<void(Node<T>&)>);                           \
  template void backward<T>(const Var<T>&);

VOXINPAINT_INSTANTIATE(float)
VOXINPAINT_INSTANTIATE(double)
#undef VOXINPAINT_INSTANTIATE

}  // namespace voxinpaint::nn
