// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace voxinpaint::nn {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be positive");
}

template <class T>
void Adam<T>::step(ParameterStore<T>& params) {
  ++steps_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (auto& [name, var] : params.entries()) {
    if (!var.has_grad()) continue;
    auto it = state_.find(name);
    if (it == state_.end())
      it = state_.emplace(name, Moments{Array<T>(var.shape()), Array<T>(var.shape())}).first;
    Moments& mo = it->second;
    const auto& g = var.grad().data;
    auto& p = var.mutable_value().data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double m = cfg_.beta1 * mo.m.data[i] + (1.0 - cfg_.beta1) * gi;
      const double v = cfg_.beta2 * mo.v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
      mo.m.data[i] = static_cast<T>(m);
      mo.v.data[i] = static_cast<T>(v);
      p[i] = static_cast<T>(p[i] - cfg_.lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps));
    }
  }
}

void PlateauScheduler::validate() const {
  if (!(factor > 0.0 && factor < 1.0)) throw std::invalid_argument("plateau: factor must lie in (0, 1)");
  if (patience < 0) throw std::invalid_argument("plateau: patience must be >= 0");
}

double PlateauScheduler::step(double metric) {
  if (metric < best) {
    best = metric;
    epochs_since_improvement = 0;
    return 1.0;
  }
  if (++epochs_since_improvement >= patience) {
    epochs_since_improvement = 0;
    return factor;
  }
  return 1.0;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace voxinpaint::nn
