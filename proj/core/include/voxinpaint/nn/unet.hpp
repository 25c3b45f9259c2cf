// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "voxinpaint/nn/checkpoint.hpp"
#include "voxinpaint/nn/layers.hpp"

namespace voxinpaint::nn {

/// Encoder/decoder with skip connections. Level i runs at 1/2^i of the input
/// resolution with widths[i] channels; the last level is the bottleneck, so
/// there are widths.size() - 1 poolings.
struct UNetConfig {
  int spatial = 2;
  int in_channels = 4;
  std::vector<int> widths{64, 128, 256, 512};
  /// Residual double-conv blocks (1x1 projection when widths differ).
  bool residual = false;
  /// Sinusoidal embedding size; 0 disables timestep conditioning.
  int time_dim = 0;
  /// Output channels of each 1x1 head.
  std::vector<int> heads{1};
  /// Heads also see the raw input, concatenated after the last decoder block.
  bool input_skip = false;

  void validate() const;
  /// Input spatial extents must be divisible by this.
  [[nodiscard]] int divisor() const { return 1 << (static_cast<int>(widths.size()) - 1); }

  void store(Checkpoint& ck) const;
  static UNetConfig load(const Checkpoint& ck);
  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

template <class T>
class UNet {
 public:
  UNet(const UNetConfig& cfg, std::uint64_t seed);

  /// x is (N, in_channels, spatial...). `timesteps` holds one entry per item
  /// and is required exactly when time_dim > 0. Returns one tensor per head.
  std::vector<Var<T>> forward(const Var<T>& x, const std::vector<int>& timesteps = {}) const;

  [[nodiscard]] const UNetConfig& config() const { return cfg_; }
  ParameterStore<T>& parameters() { return params_; }
  [[nodiscard]] const ParameterStore<T>& parameters() const { return params_; }

 private:
  struct Block {
    Conv<T> a, b, skip;
    bool has_skip = false;
  };
  Block make_block(const std::string& name, int in, int out, Rng& rng);
  Var<T> run_block(const Block& blk, const Var<T>& x) const;

  UNetConfig cfg_;
  ParameterStore<T> params_;
  std::vector<Block> enc_, dec_;
  std::vector<TransposeConv<T>> up_;
  Linear<T> time1_, time2_;
  std::vector<Conv<T>> heads_;
};

}  // namespace voxinpaint::nn
