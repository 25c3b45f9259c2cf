// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <map>
#include <string>

#include "voxinpaint/nn/layers.hpp"

namespace voxinpaint::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Adam with bias correction. Moment buffers are keyed by parameter name.
template <class T>
class Adam {
 public:
  struct Moments {
    Array<T> m;
    Array<T> v;
  };

  explicit Adam(AdamConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  /// One update for every parameter holding a gradient. Parameters without
  /// a gradient are left untouched.
  void step(ParameterStore<T>& params);

  [[nodiscard]] double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  [[nodiscard]] long step_count() const { return steps_; }
  void set_step_count(long s) { steps_ = s; }
  [[nodiscard]] const AdamConfig& config() const { return cfg_; }
  [[nodiscard]] const std::map<std::string, Moments>& state() const { return state_; }
  std::map<std::string, Moments>& state() { return state_; }

 private:
  AdamConfig cfg_;
  long steps_ = 0;
  std::map<std::string, Moments> state_;
};

/// Halves (by `factor`) the learning rate once the monitored metric has
/// failed to improve for `patience` consecutive epochs; the counter then
/// restarts. Lower is better; improvement is strict.
struct PlateauScheduler {
  double factor = 0.5;
  int patience = 5;
  double best = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  void validate() const;
  /// Returns the multiplier to apply to the current learning rate.
  double step(double metric);
};

}  // namespace voxinpaint::nn
