// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "voxinpaint/morphology.hpp"
#include "voxinpaint/random.hpp"

namespace voxinpaint {

using nn::Array;
using nn::Var;

void MaskNetConfig::validate() const {
  if (levels < 1 || levels > 6) throw std::invalid_argument("stage1: levels must be in [1, 6]");
  if (base_channels < 1) throw std::invalid_argument("stage1: base_channels must be positive");
  if (epochs < 1) throw std::invalid_argument("stage1: epochs must be positive");
  if (!(lr > 0)) throw std::invalid_argument("stage1: lr must be positive");
  if (batch < 1) throw std::invalid_argument("stage1: batch must be positive");
  plateau.validate();
  if (!(threshold > 0 && threshold < 1)) throw std::invalid_argument("stage1: threshold must lie in (0, 1)");
  if (!(indicator_dropout >= 0 && indicator_dropout < 1))
    throw std::invalid_argument("stage1: indicator_dropout must lie in [0, 1)");
  if (!(max_rotation_deg >= 0 && max_rotation_deg <= 180))
    throw std::invalid_argument("stage1: max_rotation_deg must lie in [0, 180]");
}

nn::UNetConfig MaskNetConfig::unet() const {
  nn::UNetConfig u;
  u.spatial = 2;
  u.in_channels = kSliceChannels;
  u.widths.clear();
  for (int i = 0; i < levels; ++i) u.widths.push_back(base_channels << i);
  u.residual = false;
  u.time_dim = 0;
  u.heads = {1};
  return u;
}

DamageMask coarse_indicator(const DamageMask& mask, double dropout, std::uint64_t seed) {
  DamageMask out = dilate(mask, StructuringElement::box(1));
  Rng rng(seed);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] && rng.bernoulli(dropout)) out.set(i, false);
  return out;
}

DamageMask indicator_for(const Sample& s, double dropout, std::uint64_t root_seed, std::string_view tag,
                         std::int64_t epoch) {
  return coarse_indicator(s.mask, dropout, derive_seed(root_seed, tag, epoch, s.source_id));
}

SliceBatch extract_slices(const Sample& s, const DamageMask& indicator, bool standardize) {
  const Dims d = s.v_dam.dims();
  if (indicator.dims() != d || s.mask.dims() != d || s.c_dam.dims() != d)
    throw std::invalid_argument("extract_slices: dims mismatch");
  const std::size_t px = static_cast<std::size_t>(d.nx) * d.ny;
  SliceBatch b;
  b.inputs = Array<float>({d.nz, kSliceChannels, d.ny, d.nx});
  b.targets = Array<float>({d.nz, 1, d.ny, d.nx});
  for (int z = 0; z < d.nz; ++z) {
    float* row = b.inputs.ptr() + static_cast<std::size_t>(z) * kSliceChannels * px;
    for (std::size_t p = 0; p < px; ++p) {
      const std::size_t i = static_cast<std::size_t>(z) * px + p;
      for (int c = 0; c < 3; ++c) row[c * px + p] = s.c_dam.at(c, i);
      row[3 * px + p] = indicator[i] ? 1.0F : 0.0F;
      b.targets.data[i] = s.mask[i] ? 1.0F : 0.0F;
    }
    if (standardize) standardize_rgb({row, kSliceChannels * px});
    b.slice_index.push_back(z);
    b.sample_id.push_back(s.source_id);
  }
  return b;
}

DamageMask stack_slices(const Array<float>& slices, float threshold) {
  const Dims d{};
  if (slices.shape != nn::Shape{d.nz, 1, d.ny, d.nx})
    throw nn::ShapeError("stack_slices: expected " + nn::shape_str({d.nz, 1, d.ny, d.nx}) + ", got " +
                         nn::shape_str(slices.shape));
  DamageMask m(d);
  for (std::size_t i = 0; i < slices.size(); ++i) m.set(i, slices.data[i] >= threshold);
  return m;
}

void standardize_rgb(std::span<float> image) {
  const std::size_t px = image.size() / kSliceChannels;
  for (int c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < px; ++p) image[c * px + p] = (image[c * px + p] - kImageNetMean[c]) / kImageNetStd[c];
}

void unstandardize_rgb(std::span<float> image) {
  const std::size_t px = image.size() / kSliceChannels;
  for (int c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < px; ++p) image[c * px + p] = image[c * px + p] * kImageNetStd[c] + kImageNetMean[c];
}

AugmentParams draw_augment(std::uint64_t seed, double max_rotation_deg) {
  Rng rng(seed);
  AugmentParams p;
  p.flip_x = rng.bernoulli(0.5);
  p.flip_y = rng.bernoulli(0.5);
  p.angle_deg = rng.uniform(-max_rotation_deg, max_rotation_deg);
  return p;
}

void augment_slice(std::span<float> input, std::span<float> target, int height, int width, const AugmentParams& p) {
  const std::size_t px = static_cast<std::size_t>(height) * width;
  if (input.size() != kSliceChannels * px || target.size() != px)
    throw std::invalid_argument("augment_slice: buffer sizes do not match " + std::to_string(height) + "x" +
                                std::to_string(width));
  std::vector<float*> planes;
  for (int c = 0; c < kSliceChannels; ++c) planes.push_back(input.data() + c * px);
  planes.push_back(target.data());

  for (float* pl : planes) {
    if (p.flip_x)
      for (int y = 0; y < height; ++y) std::reverse(pl + y * width, pl + (y + 1) * width);
    if (p.flip_y)
      for (int y = 0; y < height / 2; ++y) std::swap_ranges(pl + y * width, pl + (y + 1) * width, pl + (height - 1 - y) * width);
  }
  if (p.angle_deg == 0.0) return;

  const double th = p.angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  std::vector<float> src(planes.size() * px);
  for (std::size_t k = 0; k < planes.size(); ++k) std::copy_n(planes[k], px, src.begin() + k * px);
  auto at = [&](std::size_t k, int x, int y) -> float {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0.0F;
    return src[k * px + static_cast<std::size_t>(y) * width + x];
  };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      // Inverse mapping: the source of each output pixel.
      const double u = x - cx, v = y - cy;
      const double sx = cs * u + sn * v + cx, sy = -sn * u + cs * v + cy;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      const std::size_t o = static_cast<std::size_t>(y) * width + x;
      for (std::size_t k = 0; k < 3; ++k)
        planes[k][o] = static_cast<float>((1 - fx) * (1 - fy) * at(k, x0, y0) + fx * (1 - fy) * at(k, x0 + 1, y0) +
                                          (1 - fx) * fy * at(k, x0, y0 + 1) + fx * fy * at(k, x0 + 1, y0 + 1));
      const int nx = static_cast<int>(std::floor(sx + 0.5)), ny = static_cast<int>(std::floor(sy + 0.5));
      for (std::size_t k = 3; k < planes.size(); ++k) planes[k][o] = at(k, nx, ny);
    }
}

MaskModel::MaskModel(const MaskNetConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), net_(std::make_unique<nn::UNet<float>>((cfg.validate(), cfg.unet()), seed)) {}

MaskModel::MaskModel(const nn::Checkpoint& ck) {
  if (ck.model_name != "mask_unet")
    throw std::invalid_argument("stage1: checkpoint holds model '" + ck.model_name + "', expected mask_unet");
  cfg_.levels = static_cast<int>(ck.scalar("config/levels"));
  cfg_.base_channels = static_cast<int>(ck.scalar("config/base_channels"));
  cfg_.threshold = ck.scalar("config/threshold");
  cfg_.indicator_dropout = ck.scalar("config/indicator_dropout");
  cfg_.validate();
  if (nn::UNetConfig::load(ck) != cfg_.unet()) throw std::invalid_argument("stage1: inconsistent checkpoint config");
  net_ = std::make_unique<nn::UNet<float>>(cfg_.unet(), 0);
  nn::load_parameters(ck, net_->parameters());
}

nn::Checkpoint MaskModel::checkpoint() const {
  nn::Checkpoint ck;
  ck.model_name = "mask_unet";
  net_->config().store(ck);
  ck.put("config/levels", Array<float>({1}, static_cast<float>(cfg_.levels)));
  ck.put("config/base_channels", Array<float>({1}, static_cast<float>(cfg_.base_channels)));
  ck.put("config/threshold", Array<float>({1}, static_cast<float>(cfg_.threshold)));
  ck.put("config/indicator_dropout", Array<float>({1}, static_cast<float>(cfg_.indicator_dropout)));
  nn::store_parameters(ck, net_->parameters());
  return ck;
}

Var<float> MaskModel::logits(const Var<float>& inputs) const { return net_->forward(inputs)[0]; }

Array<float> MaskModel::predict(const Array<float>& inputs) const {
  nn::NoGradGuard no_grad;
  return nn::sigmoid(logits(nn::constant(inputs))).value();
}

Array<float> predict_slice(const MaskModel& model, const Array<float>& input) {
  if (input.rank() != 3 || input.shape[0] != kSliceChannels)
    throw nn::ShapeError("predict_slice: expected (4, H, W), got " + nn::shape_str(input.shape));
  Array<float> batch({1, input.shape[0], input.shape[1], input.shape[2]}, input.data);
  Array<float> p = model.predict(batch);
  return Array<float>({1, input.shape[1], input.shape[2]}, std::move(p.data));
}

DamageMask aggregate_mask(const Array<float>& slice_masks, float threshold) {
  return close(stack_slices(slice_masks, threshold), StructuringElement::box(1));
}

DamageMask predict_mask(const MaskModel& model, const Sample& s, const DamageMask& indicator) {
  const SliceBatch b = extract_slices(s, indicator, true);
  return aggregate_mask(model.predict(b.inputs), static_cast<float>(model.config().threshold));
}

namespace {

constexpr const char* kValDamageTag = "stage1-val-damage";
constexpr const char* kValIndicatorTag = "stage1-val-indicator";

}  // namespace

double stage1_validation_bce(const MaskModel& model, const std::vector<const Artifact*>& val,
                             const DamageConfig& damage, std::uint64_t seed) {
  nn::NoGradGuard no_grad;
  double total = 0;
  std::size_t rows = 0;
  for (const Artifact* a : val) {
    const Sample s = realize_damage(*a, damage, seed, kValDamageTag, 0);
    if (s.degenerate) continue;
    const SliceBatch b = extract_slices(s, indicator_for(s, model.config().indicator_dropout, seed, kValIndicatorTag, 0));
    const double l = nn::bce_with_logits(model.logits(nn::constant(b.inputs)), b.targets).item();
    total += l * b.rows();
    rows += static_cast<std::size_t>(b.rows());
  }
  if (rows == 0) throw std::invalid_argument("stage1: validation set is empty");
  return total / static_cast<double>(rows);
}

Stage1Result train_stage1(const std::vector<const Artifact*>& train, const std::vector<const Artifact*>& val,
                          const MaskNetConfig& cfg, const DamageConfig& damage, std::uint64_t seed,
                          const std::function<void(const Stage1Epoch&)>& on_epoch) {
  cfg.validate();
  damage.validate();
  if (train.empty()) throw std::invalid_argument("stage1: training set is empty");
  if (val.empty()) throw std::invalid_argument("stage1: validation set is empty");

  MaskModel model(cfg, derive_seed(seed, "stage1-init", 0, ""));
  nn::AdamConfig ac;
  ac.lr = cfg.lr;
  nn::Adam<float> adam(ac);
  nn::PlateauScheduler sched{cfg.plateau.factor, cfg.plateau.patience};
  Stage1Result result;
  double best = std::numeric_limits<double>::infinity();
  const Dims d{};
  const std::size_t px = static_cast<std::size_t>(d.nx) * d.ny;
  const std::size_t in_row = kSliceChannels * px;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<float> inputs, targets;
    for (const Artifact* a : train) {
      const Sample s = realize_damage(*a, damage, seed, "stage1-damage", epoch);
      if (s.degenerate) continue;
      SliceBatch b = extract_slices(s, indicator_for(s, cfg.indicator_dropout, seed, "stage1-indicator", epoch), false);
      for (int z = 0; z < b.rows(); ++z) {
        std::span<float> in(b.inputs.ptr() + z * in_row, in_row);
        std::span<float> tg(b.targets.ptr() + z * px, px);
        if (cfg.augment)
          augment_slice(in, tg, d.ny, d.nx,
                        draw_augment(derive_seed(seed, "stage1-augment", epoch, a->source_id + "/" + std::to_string(z)),
                                     cfg.max_rotation_deg));
        standardize_rgb(in);
        inputs.insert(inputs.end(), in.begin(), in.end());
        targets.insert(targets.end(), tg.begin(), tg.end());
      }
    }
    const std::size_t n = targets.size() / px;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle(derive_seed(seed, "stage1-shuffle", epoch, ""));
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    double loss_sum = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch)) {
      const int bsz = static_cast<int>(std::min<std::size_t>(cfg.batch, n - start));
      Array<float> xb({bsz, kSliceChannels, d.ny, d.nx}), yb({bsz, 1, d.ny, d.nx});
      for (int r = 0; r < bsz; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(inputs.begin() + src * in_row, in_row, xb.ptr() + r * in_row);
        std::copy_n(targets.begin() + src * px, px, yb.ptr() + r * px);
      }
      model.net().parameters().zero_grad();
      auto loss = nn::bce_with_logits(model.logits(nn::constant(std::move(xb))), yb);
      nn::backward(loss);
      adam.step(model.net().parameters());
      loss_sum += loss.item() * bsz;
    }

    Stage1Epoch log;
    log.epoch = epoch;
    log.train_bce = loss_sum / static_cast<double>(std::max<std::size_t>(n, 1));
    log.val_bce = stage1_validation_bce(model, val, damage, seed);
    log.lr = adam.lr();
    if (log.val_bce < best) {
      best = log.val_bce;
      result.best = model.checkpoint();
      result.best_epoch = epoch;
    }
    adam.set_lr(adam.lr() * sched.step(log.val_bce));
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.model = std::make_unique<MaskModel>(result.best);
  return result;
}

}  // namespace voxinpaint
