// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "voxinpaint/nn/optim.hpp"

namespace voxinpaint::nn {

/// VCKPT1 container: the line "VCKPT1", the model name, an entry count,
/// then per entry its name, rank, dims and little-endian f32 payload. All
/// integers are u32 little-endian; strings are length-prefixed. Optimizer
/// state lives under names starting with "opt/".
struct Checkpoint {
  std::string model_name;
  std::vector<std::pair<std::string, Array<float>>> entries;

  void put(std::string name, Array<float> value);
  [[nodiscard]] const Array<float>* find(const std::string& name) const;
  [[nodiscard]] const Array<float>& get(const std::string& name) const;
  [[nodiscard]] double scalar(const std::string& name) const;

  void write(std::ostream& out) const;
  static Checkpoint read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

/// Copies parameters in store order.
template <class T>
void store_parameters(Checkpoint& ck, const ParameterStore<T>& params);
/// Overwrites every parameter; names and shapes must match exactly.
template <class T>
void load_parameters(const Checkpoint& ck, ParameterStore<T>& params);

/// Writes opt/lr, opt/step and opt/<param>/m|v.
template <class T>
void store_optimizer(Checkpoint& ck, const Adam<T>& adam);
template <class T>
void load_optimizer(const Checkpoint& ck, Adam<T>& adam);

}  // namespace voxinpaint::nn
