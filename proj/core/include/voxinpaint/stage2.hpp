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

/// Channels of the conditioning volume: occupancy, mask, RGB.
inline constexpr int kInpaintChannels = 5;

struct DiffusionSchedule {
  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  std::vector<double> betas, alphas, alpha_bars;

  /// beta_t = beta_start + t/(T-1) * (beta_end - beta_start).
  static DiffusionSchedule linear(int timesteps = 1000, double beta_start = 1e-4, double beta_end = 2e-2);
  /// Throws std::logic_error unless betas increase, alpha_bars decrease in
  /// (0, 1], alpha_bar_0 > 0.999 and alpha_bar_{T-1} < 0.01.
  void check() const;
};

struct LossWeights {
  double noise = 1.0;
  double bce = 1.0;
  double color = 20.0;
  double perceptual = 0.1;
  double prior = 0.1;
  void validate() const;
};

struct InpaintNetConfig {
  std::vector<int> widths{32, 64, 96, 128};
  int time_dim = 128;
  int epochs = 100;
  double lr = 1e-3;
  int batch = 4;
  double mirror_probability = 0.5;
  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  std::array<double, 3> palette{0.92, 0.90, 0.85};
  nn::PlateauScheduler plateau;

  void validate() const;
  [[nodiscard]] nn::UNetConfig unet() const;
  [[nodiscard]] DiffusionSchedule schedule() const {
    return DiffusionSchedule::linear(timesteps, beta_start, beta_end);
  }
};

/// Un-noised conditioning input for one object.
struct InpaintInput {
  nn::Array<float> x;  // (1, 5, D, H, W)
  int t = 0;
  DamageMask mask;
  VoxelGrid v_mask;
  ColorVolume c_mask;
};

/// V^mask = v_dam & !mask, C^mask = c_dam * (1 - mask), channel 1 = mask.
InpaintInput build_input(const VoxelGrid& v_dam, const ColorVolume& c_dam, const DamageMask& mask);
inline InpaintInput build_input(const Sample& s, const DamageMask& mask) {
  return build_input(s.v_dam, s.c_dam, mask);
}

/// Channel 0 after masked forward diffusion: V^mask outside the mask and
/// sqrt(abar_t) v_gt + sqrt(1 - abar_t) eps inside it.
nn::Array<float> noise_occupancy(const VoxelGrid& v_mask, const VoxelGrid& v_gt, const DamageMask& mask, int t,
                                 const DiffusionSchedule& schedule, std::span<const float> eps);

/// Standard normal draws, one per voxel.
std::vector<float> draw_noise(std::uint64_t seed, std::size_t count);

/// Frozen convolutional feature pyramid applied to RGB slices.
class PerceptualExtractor {
 public:
  /// Three 3x3 conv layers (3 -> 8 -> 16 -> 32) with 2x2 average pooling
  /// between them. `linear` drops the relu.
  static PerceptualExtractor random(std::uint64_t seed, bool linear = false);
  /// Layers named feat<k>.weight / feat<k>.bias, k = 0, 1, ...
  static PerceptualExtractor from_checkpoint(const nn::Checkpoint& ck, bool linear = false);

  /// Feature maps of (N, 3, H, W) images, one per layer.
  template <class T>
  std::vector<nn::Var<T>> features(const nn::Var<T>& images) const;

  [[nodiscard]] int layers() const { return static_cast<int>(weights_.size()); }

 private:
  std::vector<nn::Array<float>> weights_, biases_;
  bool linear_ = false;
};

/// Sum over layers of the mean squared feature difference between the
/// axial slices of pred and gt, both (N, 3, D, H, W).
template <class T>
nn::Var<T> perceptual_slice_loss(const nn::Var<T>& pred, const nn::Array<T>& gt, const PerceptualExtractor& ex);

template <class T>
struct LossTerms {
  nn::Var<T> total;
  double noise = 0, bce = 0, color = 0, perceptual = 0, prior = 0;
  [[nodiscard]] double total_value() const { return total.item(); }
};

/// Batched training targets, all (N, C, D, H, W).
template <class T>
struct LossTargets {
  nn::Array<T> c_mask;  // 3 channels
  nn::Array<T> mask;    // 1 channel
  nn::Array<T> v_gt;    // 1 channel
  nn::Array<T> c_gt;    // 3 channels
  nn::Array<T> eps;     // 1 channel
};

/// heads = {noise prediction, occupancy logits, color residual}.
template <class T>
LossTerms<T> composite_loss(const std::vector<nn::Var<T>>& heads, const LossTargets<T>& targets, const LossWeights& w,
                            const PerceptualExtractor& ex, const std::array<double, 3>& palette);

struct InpaintResult {
  VoxelGrid v_hat;
  ColorVolume c_hat;
  /// Composed color before support zeroing.
  ColorVolume c_composed;
  nn::Array<float> occupancy_logits;
  nn::Array<float> color_residual;
};

/// Inside the mask: occupancy from sigmoid(logit) >= 0.5 and color
/// clamp(C^mask + residual). Outside: V^mask and C^mask unchanged. Color is
/// then zeroed wherever v_hat is empty.
InpaintResult compose_output(const nn::Array<float>& logits, const nn::Array<float>& residual, const InpaintInput& in);

class InpaintModel {
 public:
  InpaintModel(const InpaintNetConfig& cfg, std::uint64_t seed);
  explicit InpaintModel(const nn::Checkpoint& ck);

  [[nodiscard]] std::vector<nn::Var<float>> forward(const nn::Var<float>& x, const std::vector<int>& t) const;
  [[nodiscard]] nn::Checkpoint checkpoint() const;
  nn::UNet<float>& net() { return *net_; }
  [[nodiscard]] const InpaintNetConfig& config() const { return cfg_; }
  [[nodiscard]] const DiffusionSchedule& schedule() const { return schedule_; }

 private:
  InpaintNetConfig cfg_;
  DiffusionSchedule schedule_;
  std::unique_ptr<nn::UNet<float>> net_;
};

enum class InferenceMode { kSingleStep, kDdpmLoop };
InferenceMode parse_inference_mode(std::string_view s);
std::string to_string(InferenceMode m);

struct InferenceOptions {
  InferenceMode mode = InferenceMode::kSingleStep;
  std::uint64_t seed = 0;
  /// Reverse steps of the loop on an evenly respaced subsequence of the
  /// schedule; 0 runs every timestep.
  int ddpm_steps = 0;
};

InpaintResult infer_inpaint(const InpaintModel& model, const VoxelGrid& v_dam, const ColorVolume& c_dam,
                            const DamageMask& mask, const InferenceOptions& opt);

/// Mirrors x -> nx-1-x.
template <class Tag>
BinaryVolume<Tag> mirror_x(const BinaryVolume<Tag>& v) {
  BinaryVolume<Tag> out(v.dims());
  const Dims d = v.dims();
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) out.set(x, y, z, v.at(d.nx - 1 - x, y, z));
  return out;
}
ColorVolume mirror_x(const ColorVolume& c);
Sample mirror_x(const Sample& s);

/// Chooses the mask the model is conditioned on for a realization. The
/// default uses the ground-truth mask.
using MaskSource = std::function<DamageMask(const Sample&, std::string_view tag, std::int64_t epoch)>;

struct Stage2Epoch {
  int epoch = 0;
  double lr = 0;
  std::array<double, 6> train{};  // total, noise, bce, color, perceptual, prior
  std::array<double, 6> val{};
};

struct Stage2Result {
  std::unique_ptr<InpaintModel> model;  // best validation checkpoint
  nn::Checkpoint best;
  std::vector<Stage2Epoch> log;
  int best_epoch = 0;
  std::vector<std::uint64_t> damage_seeds;
};

/// Fixed-noise validation loss terms (total first).
std::array<double, 6> stage2_validation_loss(const InpaintModel& model, const std::vector<const Artifact*>& val,
                                             const LossWeights& w, const DamageConfig& damage,
                                             const PerceptualExtractor& ex, std::uint64_t seed,
                                             const MaskSource& masks = {});

Stage2Result train_stage2(const std::vector<const Artifact*>& train, const std::vector<const Artifact*>& val,
                          const InpaintNetConfig& cfg, const LossWeights& w, const DamageConfig& damage,
                          const PerceptualExtractor& ex, std::uint64_t seed, const MaskSource& masks = {},
                          const std::function<void(const Stage2Epoch&)>& on_epoch = {});

}  // namespace voxinpaint
