// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxinpaint/dataset.hpp"
#include "voxinpaint/nn/optim.hpp"
#include "voxinpaint/nn/unet.hpp"

namespace voxinpaint {

/// Conventional ImageNet channel statistics.
inline constexpr std::array<float, 3> kImageNetMean{0.485F, 0.456F, 0.406F};
inline constexpr std::array<float, 3> kImageNetStd{0.229F, 0.224F, 0.225F};

/// Input channels of a slice row: RGB plus the coarse damage indicator.
inline constexpr int kSliceChannels = 4;

struct MaskNetConfig {
  int levels = 4;
  int base_channels = 64;
  int epochs = 50;
  double lr = 1e-4;
  int batch = 8;
  double threshold = 0.5;
  /// Fraction of indicator pixels dropped after dilating the mask.
  double indicator_dropout = 0.3;
  bool augment = true;
  double max_rotation_deg = 15.0;
  nn::PlateauScheduler plateau;

  void validate() const;
  /// base, 2*base, 4*base, ... over `levels` levels.
  [[nodiscard]] nn::UNetConfig unet() const;
};

/// Rows of 4 x H x W inputs with 1 x H x W binary targets.
struct SliceBatch {
  nn::Array<float> inputs;
  nn::Array<float> targets;
  std::vector<int> slice_index;
  std::vector<std::string> sample_id;
  [[nodiscard]] int rows() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
};

/// dilate(mask, 3x3x3 box) with each voxel then dropped with probability
/// `dropout`.
DamageMask coarse_indicator(const DamageMask& mask, double dropout, std::uint64_t seed);

/// One row per axial slice: channels 0-2 are c_dam, channel 3 the indicator;
/// targets are the mask slices. RGB is standardized when asked.
SliceBatch extract_slices(const Sample& s, const DamageMask& indicator, bool standardize = true);

/// Stacks 32 binary slice targets (or thresholded predictions) back into a
/// volume. Throws unless there is exactly one row per slice.
DamageMask stack_slices(const nn::Array<float>& slices, float threshold = 0.5F);

/// In place on a 4 x pixels planar image; channel 3 is untouched.
void standardize_rgb(std::span<float> image);
void unstandardize_rgb(std::span<float> image);

struct AugmentParams {
  bool flip_x = false;
  bool flip_y = false;
  double angle_deg = 0.0;
};

AugmentParams draw_augment(std::uint64_t seed, double max_rotation_deg = 15.0);

/// Applies the same flips then rotation about the slice center to a raw
/// (unstandardized) 4 x H x W input and its 1 x H x W target. RGB is sampled
/// bilinearly, indicator and target by nearest neighbor; pixels from outside
/// the frame are 0.
void augment_slice(std::span<float> input, std::span<float> target, int height, int width,
                   const AugmentParams& p);

class MaskModel {
 public:
  MaskModel(const MaskNetConfig& cfg, std::uint64_t seed);
  explicit MaskModel(const nn::Checkpoint& ck);

  /// Logits (N, 1, H, W) for standardized inputs (N, 4, H, W).
  [[nodiscard]] nn::Var<float> logits(const nn::Var<float>& inputs) const;
  /// Sigmoid probabilities, no graph.
  [[nodiscard]] nn::Array<float> predict(const nn::Array<float>& inputs) const;

  [[nodiscard]] nn::Checkpoint checkpoint() const;
  nn::UNet<float>& net() { return *net_; }
  [[nodiscard]] const MaskNetConfig& config() const { return cfg_; }

 private:
  MaskNetConfig cfg_;
  std::unique_ptr<nn::UNet<float>> net_;
};

/// Probability map (1, H, W) for a single standardized (4, H, W) input.
nn::Array<float> predict_slice(const MaskModel& model, const nn::Array<float>& input);

/// Stack then close with the 3x3x3 box.
DamageMask aggregate_mask(const nn::Array<float>& slice_masks, float threshold = 0.5F);

/// Full Stage-1 inference on one damaged sample.
DamageMask predict_mask(const MaskModel& model, const Sample& s, const DamageMask& indicator);

struct Stage1Epoch {
  int epoch = 0;
  double train_bce = 0;
  double val_bce = 0;
  double lr = 0;
};

struct Stage1Result {
  std::unique_ptr<MaskModel> model;  // best validation checkpoint
  nn::Checkpoint best;
  std::vector<Stage1Epoch> log;
  int best_epoch = 0;
};

/// Coarse indicator of a realization, seeded by
/// derive_seed(root_seed, tag, epoch, source_id).
DamageMask indicator_for(const Sample& s, double dropout, std::uint64_t root_seed, std::string_view tag,
                         std::int64_t epoch);

/// Mean BCE of the model over fixed validation realizations (no augmentation).
double stage1_validation_bce(const MaskModel& model, const std::vector<const Artifact*>& val,
                             const DamageConfig& damage, std::uint64_t seed);

Stage1Result train_stage1(const std::vector<const Artifact*>& train, const std::vector<const Artifact*>& val,
                          const MaskNetConfig& cfg, const DamageConfig& damage, std::uint64_t seed,
                          const std::function<void(const Stage1Epoch&)>& on_epoch = {});

}  // namespace voxinpaint
