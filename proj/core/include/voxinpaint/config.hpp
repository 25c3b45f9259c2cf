// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "voxinpaint/damage.hpp"
#include "voxinpaint/stage1.hpp"
#include "voxinpaint/stage2.hpp"

namespace voxinpaint {

/// Which damage mask conditions inpainting and the symmetry baseline at
/// evaluation time.
enum class MaskSourceKind { kPredicted, kGroundTruth };
MaskSourceKind parse_mask_source(std::string_view s);
std::string to_string(MaskSourceKind k);

struct RunConfig {
  int resolution = kResolution;
  std::uint64_t seed = 0;
  MaskSourceKind mask_source = MaskSourceKind::kPredicted;
  InferenceMode inference = InferenceMode::kSingleStep;
  int ddpm_steps = 50;
  /// VCKPT1 file with feat<k> layers; empty selects the built-in extractor.
  std::string perceptual_weights;

  MaskNetConfig stage1;
  InpaintNetConfig stage2;
  LossWeights loss;
  DamageConfig damage;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` text with `[section]` headers; `#` starts a
/// comment. Keys not listed by dump_config are rejected, as are duplicates.
/// Values start from the defaults of RunConfig.
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Every key in canonical order. parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& cfg);

}  // namespace voxinpaint
