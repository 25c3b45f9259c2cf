// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "voxinpaint/nn/checkpoint.hpp"
#include "voxinpaint/nn/ops.hpp"
#include "voxinpaint/random.hpp"

namespace voxinpaint {

using nn::Array;
using nn::Var;

DiffusionSchedule DiffusionSchedule::linear(int timesteps, double beta_start, double beta_end) {
  if (timesteps < 2) throw std::invalid_argument("schedule: need at least 2 timesteps");
  if (!(beta_start > 0 && beta_start < beta_end && beta_end < 1))
    throw std::invalid_argument("schedule: need 0 < beta_start < beta_end < 1");
  DiffusionSchedule s;
  s.timesteps = timesteps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.betas.resize(timesteps);
  s.alphas.resize(timesteps);
  s.alpha_bars.resize(timesteps);
  double prod = 1.0;
  for (int t = 0; t < timesteps; ++t) {
    const double f = static_cast<double>(t) / (timesteps - 1);
    s.betas[t] = (1.0 - f) * beta_start + f * beta_end;
    s.alphas[t] = 1.0 - s.betas[t];
    prod *= s.alphas[t];
    s.alpha_bars[t] = prod;
  }
  return s;
}

void DiffusionSchedule::check() const {
  const auto n = static_cast<std::size_t>(timesteps);
  if (betas.size() != n || alphas.size() != n || alpha_bars.size() != n)
    throw std::logic_error("schedule: table sizes disagree with timesteps");
  for (std::size_t t = 1; t < n; ++t) {
    if (!(betas[t] > betas[t - 1])) throw std::logic_error("schedule: betas not strictly increasing");
    if (!(alpha_bars[t] < alpha_bars[t - 1])) throw std::logic_error("schedule: alpha_bars not strictly decreasing");
  }
  for (double a : alpha_bars)
    if (!(a > 0 && a <= 1)) throw std::logic_error("schedule: alpha_bar outside (0, 1]");
  if (!(alpha_bars.front() > 0.999)) throw std::logic_error("schedule: alpha_bar_0 must exceed 0.999");
  if (!(alpha_bars.back() < 0.01)) throw std::logic_error("schedule: alpha_bar_{T-1} must be below 0.01");
}

void LossWeights::validate() const {
  for (double v : {noise, bce, color, perceptual, prior})
    if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("stage2: loss weights must be finite and >= 0");
}

void InpaintNetConfig::validate() const {
  if (widths.empty() || widths.size() > 5) throw std::invalid_argument("stage2: need 1 to 5 widths");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("stage2: widths must be positive");
  if (time_dim < 2 || time_dim % 2 != 0) throw std::invalid_argument("stage2: time_dim must be even and >= 2");
  if (epochs < 1) throw std::invalid_argument("stage2: epochs must be positive");
  if (!(lr > 0)) throw std::invalid_argument("stage2: lr must be positive");
  plateau.validate();
  if (batch < 1) throw std::invalid_argument("stage2: batch must be positive");
  if (!(mirror_probability >= 0 && mirror_probability <= 1))
    throw std::invalid_argument("stage2: mirror_probability must lie in [0, 1]");
  for (double p : palette)
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("stage2: palette entries must lie in [0, 1]");
  (void)schedule();
}

nn::UNetConfig InpaintNetConfig::unet() const {
  nn::UNetConfig u;
  u.spatial = 3;
  u.in_channels = kInpaintChannels;
  u.widths = widths;
  u.residual = true;
  u.time_dim = time_dim;
  u.heads = {1, 1, 3};
  u.input_skip = true;
  return u;
}

InpaintInput build_input(const VoxelGrid& v_dam, const ColorVolume& c_dam, const DamageMask& mask) {
  const Dims d = v_dam.dims();
  if (!(mask.dims() == d) || !(c_dam.dims() == d))
    throw std::invalid_argument("build_input: volume dimensions disagree");
  const std::size_t n = d.count();
  InpaintInput in;
  in.mask = mask;
  in.v_mask = VoxelGrid(d);
  in.c_mask = ColorVolume(d);
  in.x = Array<float>({1, kInpaintChannels, d.nz, d.ny, d.nx});
  float* x = in.x.ptr();
  for (std::size_t i = 0; i < n; ++i) {
    const bool m = mask[i];
    const bool v = v_dam[i] && !m;
    in.v_mask.set(i, v);
    x[i] = v ? 1.0F : 0.0F;
    x[n + i] = m ? 1.0F : 0.0F;
    for (int c = 0; c < 3; ++c) {
      const float value = m ? 0.0F : c_dam.at(c, i);
      in.c_mask.at(c, i) = value;
      x[(2 + c) * n + i] = value;
    }
  }
  return in;
}

Array<float> noise_occupancy(const VoxelGrid& v_mask, const VoxelGrid& v_gt, const DamageMask& mask, int t,
                             const DiffusionSchedule& schedule, std::span<const float> eps) {
  const Dims d = v_mask.dims();
  const std::size_t n = d.count();
  if (!(v_gt.dims() == d) || !(mask.dims() == d)) throw std::invalid_argument("noise_occupancy: dimensions disagree");
  if (eps.size() != n) throw std::invalid_argument("noise_occupancy: need one noise value per voxel");
  if (t < 0 || t >= schedule.timesteps) throw std::invalid_argument("noise_occupancy: timestep out of range");
  const double ab = schedule.alpha_bars[t];
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  Array<float> out({1, 1, d.nz, d.ny, d.nx});
  for (std::size_t i = 0; i < n; ++i)
    out.data[i] = mask[i] ? static_cast<float>(a * (v_gt[i] ? 1.0 : 0.0) + b * eps[i])
                              : (v_mask[i] ? 1.0F : 0.0F);
  return out;
}

std::vector<float> draw_noise(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<float> out(count);
  for (auto& v : out) v = static_cast<float>(rng.normal());
  return out;
}

namespace {

constexpr int kFeatureWidths[] = {3, 8, 16, 32};

}  // namespace

PerceptualExtractor PerceptualExtractor::random(std::uint64_t seed, bool linear) {
  PerceptualExtractor ex;
  ex.linear_ = linear;
  Rng rng(seed);
  for (int k = 0; k + 1 < static_cast<int>(std::size(kFeatureWidths)); ++k) {
    const int cin = kFeatureWidths[k], cout = kFeatureWidths[k + 1];
    const double bound = std::sqrt(6.0 / (cin * 9));
    Array<float> w({cout, cin, 3, 3});
    for (auto& v : w.data) v = static_cast<float>(rng.uniform(-bound, bound));
    ex.weights_.push_back(std::move(w));
    ex.biases_.emplace_back(nn::Shape{cout});
  }
  return ex;
}

PerceptualExtractor PerceptualExtractor::from_checkpoint(const nn::Checkpoint& ck, bool linear) {
  PerceptualExtractor ex;
  ex.linear_ = linear;
  for (int k = 0;; ++k) {
    const std::string base = "feat" + std::to_string(k);
    const Array<float>* w = ck.find(base + ".weight");
    if (w == nullptr) break;
    const Array<float>& b = ck.get(base + ".bias");
    if (w->rank() != 4 || w->shape[2] != 3 || w->shape[3] != 3 || b.shape != nn::Shape{w->shape[0]})
      throw nn::ShapeError("extractor: layer " + base + " must be (out, in, 3, 3) with (out) bias, got " +
                           nn::shape_str(w->shape) + " and " + nn::shape_str(b.shape));
    if (k == 0 ? w->shape[1] != 3 : w->shape[1] != ex.weights_.back().shape[0])
      throw nn::ShapeError("extractor: layer " + base + " input channels do not chain, got " +
                           nn::shape_str(w->shape));
    ex.weights_.push_back(*w);
    ex.biases_.push_back(b);
  }
  if (ex.weights_.empty()) throw std::invalid_argument("extractor: checkpoint has no feat0.weight");
  return ex;
}

template <class T>
std::vector<Var<T>> PerceptualExtractor::features(const Var<T>& images) const {
  if (images.value().rank() != 4 || images.shape()[1] != weights_.front().shape[1])
    throw nn::ShapeError("extractor: expected (N, " + std::to_string(weights_.front().shape[1]) + ", H, W), got " +
                         nn::shape_str(images.shape()));
  std::vector<Var<T>> out;
  Var<T> h = images;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (k > 0) h = nn::avg_pool2d(h, 2);
    h = nn::conv2d(h, nn::constant(weights_[k].cast<T>()), nn::constant(biases_[k].cast<T>()), 1);
    if (!linear_) h = nn::relu(h);
    out.push_back(h);
  }
  return out;
}

template <class T>
Var<T> perceptual_slice_loss(const Var<T>& pred, const Array<T>& gt, const PerceptualExtractor& ex) {
  if (pred.shape() != gt.shape)
    throw nn::ShapeError("perceptual: pred " + nn::shape_str(pred.shape()) + " vs gt " + nn::shape_str(gt.shape));
  const auto fp = ex.features(nn::axial_slices(pred));
  const auto fg = ex.features(nn::axial_slices(nn::constant(gt)));
  Var<T> total = nn::mse(fp[0], fg[0].value());
  for (std::size_t k = 1; k < fp.size(); ++k) total = nn::add(total, nn::mse(fp[k], fg[k].value()));
  return total;
}

template <class T>
LossTerms<T> composite_loss(const std::vector<Var<T>>& heads, const LossTargets<T>& tg, const LossWeights& w,
                            const PerceptualExtractor& ex, const std::array<double, 3>& palette) {
  if (heads.size() != 3) throw std::invalid_argument("composite_loss: expected 3 heads");
  const Array<T> mask3 = nn::repeat_channels(tg.mask, 3);
  Array<T> support = tg.mask;
  for (std::size_t i = 0; i < support.size(); ++i) support.data[i] *= tg.v_gt.data.at(i);
  const Array<T> support3 = nn::repeat_channels(support, 3);

  // Unclamped so the residual keeps its gradient everywhere.
  const Var<T> composed = nn::add_const(nn::mul_const(heads[2], mask3), tg.c_mask);

  const Var<T> l_noise = nn::mse_masked(heads[0], tg.eps, tg.mask);
  const Var<T> l_bce = nn::bce_with_logits(heads[1], tg.v_gt);
  const Var<T> l_color = nn::l1_masked(composed, tg.c_gt, support3);
  const Var<T> l_perc = perceptual_slice_loss(composed, tg.c_gt, ex);
  const Var<T> l_prior = nn::color_prior(composed, support, palette);

  LossTerms<T> out;
  out.noise = static_cast<double>(l_noise.item());
  out.bce = static_cast<double>(l_bce.item());
  out.color = static_cast<double>(l_color.item());
  out.perceptual = static_cast<double>(l_perc.item());
  out.prior = static_cast<double>(l_prior.item());
  Var<T> total = nn::scale(l_noise, static_cast<T>(w.noise));
  total = nn::add(total, nn::scale(l_bce, static_cast<T>(w.bce)));
  total = nn::add(total, nn::scale(l_color, static_cast<T>(w.color)));
  total = nn::add(total, nn::scale(l_perc, static_cast<T>(w.perceptual)));
  total = nn::add(total, nn::scale(l_prior, static_cast<T>(w.prior)));
  out.total = total;
  return out;
}

InpaintResult compose_output(const Array<float>& logits, const Array<float>& residual, const InpaintInput& in) {
  const Dims d = in.v_mask.dims();
  const std::size_t n = d.count();
  if (logits.size() != n || residual.size() != 3 * n)
    throw nn::ShapeError("compose_output: logits " + nn::shape_str(logits.shape) + " / residual " +
                         nn::shape_str(residual.shape) + " do not match the volume");
  InpaintResult r;
  r.v_hat = in.v_mask;
  r.c_composed = in.c_mask;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in.mask[i]) continue;
    const float p = 1.0F / (1.0F + std::exp(-logits.data[i]));
    r.v_hat.set(i, p >= 0.5F);
    for (int c = 0; c < 3; ++c)
      r.c_composed.at(c, i) = std::clamp(in.c_mask.at(c, i) + residual.data[c * n + i], 0.0F, 1.0F);
  }
  r.c_hat = r.c_composed;
  restrict_color_to(r.c_hat, r.v_hat);
  r.occupancy_logits = logits;
  r.color_residual = residual;
  return r;
}

InpaintModel::InpaintModel(const InpaintNetConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      schedule_((cfg.validate(), cfg.schedule())),
      net_(std::make_unique<nn::UNet<float>>(cfg.unet(), seed)) {
  // Heads start at zero: no noise, logit 0 and no color change.
  for (auto& [name, v] : net_->parameters().entries())
    if (name.starts_with("head")) std::fill(v.mutable_value().data.begin(), v.mutable_value().data.end(), 0.0F);
}

namespace {

// Betas are stored as float; the shortest round-trip decimal recovers the
// configured value.
double stored_double(const nn::Checkpoint& ck, const std::string& name) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7g", ck.scalar(name));
  return std::stod(buf);
}

}  // namespace

InpaintModel::InpaintModel(const nn::Checkpoint& ck) {
  if (ck.model_name != "inpaint_unet")
    throw std::invalid_argument("stage2: checkpoint holds model '" + ck.model_name + "', expected inpaint_unet");
  const nn::UNetConfig u = nn::UNetConfig::load(ck);
  cfg_.widths = u.widths;
  cfg_.time_dim = u.time_dim;
  cfg_.timesteps = static_cast<int>(ck.scalar("config/timesteps"));
  cfg_.beta_start = stored_double(ck, "config/beta_start");
  cfg_.beta_end = stored_double(ck, "config/beta_end");
  if (const Array<float>* p = ck.find("config/palette"); p != nullptr && p->size() == 3)
    for (int c = 0; c < 3; ++c) cfg_.palette[c] = p->data[c];
  cfg_.validate();
  if (u != cfg_.unet()) throw std::invalid_argument("stage2: inconsistent checkpoint config");
  schedule_ = cfg_.schedule();
  net_ = std::make_unique<nn::UNet<float>>(u, 0);
  nn::load_parameters(ck, net_->parameters());
}

nn::Checkpoint InpaintModel::checkpoint() const {
  nn::Checkpoint ck;
  ck.model_name = "inpaint_unet";
  net_->config().store(ck);
  ck.put("config/timesteps", Array<float>({1}, static_cast<float>(cfg_.timesteps)));
  ck.put("config/beta_start", Array<float>({1}, static_cast<float>(cfg_.beta_start)));
  ck.put("config/beta_end", Array<float>({1}, static_cast<float>(cfg_.beta_end)));
  ck.put("config/palette", Array<float>({3}, {static_cast<float>(cfg_.palette[0]), static_cast<float>(cfg_.palette[1]),
                                              static_cast<float>(cfg_.palette[2])}));
  nn::store_parameters(ck, net_->parameters());
  return ck;
}

std::vector<Var<float>> InpaintModel::forward(const Var<float>& x, const std::vector<int>& t) const {
  for (int v : t)
    if (v < 0 || v >= cfg_.timesteps)
      throw std::invalid_argument("stage2: timestep " + std::to_string(v) + " outside [0, " +
                                  std::to_string(cfg_.timesteps) + ")");
  return net_->forward(x, t);
}

InferenceMode parse_inference_mode(std::string_view s) {
  if (s == "single" || s == "single_step") return InferenceMode::kSingleStep;
  if (s == "ddpm" || s == "ddpm_loop") return InferenceMode::kDdpmLoop;
  throw std::invalid_argument("unknown inference mode '" + std::string(s) + "' (expected single or ddpm)");
}

std::string to_string(InferenceMode m) { return m == InferenceMode::kSingleStep ? "single" : "ddpm"; }

InpaintResult infer_inpaint(const InpaintModel& model, const VoxelGrid& v_dam, const ColorVolume& c_dam,
                            const DamageMask& mask, const InferenceOptions& opt) {
  nn::NoGradGuard no_grad;
  InpaintInput in = build_input(v_dam, c_dam, mask);
  if (opt.mode == InferenceMode::kSingleStep) {
    const auto heads = model.forward(nn::constant(in.x), {model.config().timesteps - 1});
    return compose_output(heads[1].value(), heads[2].value(), in);
  }
  if (opt.mode != InferenceMode::kDdpmLoop) throw std::invalid_argument("infer_inpaint: unknown mode");

  const DiffusionSchedule& s = model.schedule();
  const int T = s.timesteps;
  if (opt.ddpm_steps < 0 || opt.ddpm_steps == 1)
    throw std::invalid_argument("infer_inpaint: ddpm_steps must be 0 or at least 2");
  const int k = opt.ddpm_steps == 0 ? T : std::min(opt.ddpm_steps, T);
  std::vector<int> taus(k);
  for (int i = 0; i < k; ++i)
    taus[i] = static_cast<int>(std::lround(static_cast<double>(i) * (T - 1) / (k - 1)));

  const std::size_t n = v_dam.dims().count();
  Rng rng(opt.seed);
  float* x0 = in.x.ptr();
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) x0[i] = static_cast<float>(rng.normal());

  for (int i = k - 1;; --i) {
    const int t = taus[i];
    const auto heads = model.forward(nn::constant(in.x), {t});
    if (i == 0) return compose_output(heads[1].value(), heads[2].value(), in);
    const double ab = s.alpha_bars[t];
    const double ab_prev = s.alpha_bars[taus[i - 1]];
    const double beta = 1.0 - ab / ab_prev;
    const double coef = beta / std::sqrt(1.0 - ab);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
    const double sigma = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab));
    const float* eps = heads[0].value().ptr();
    x0 = in.x.ptr();
    // Known voxels keep their clean value; only masked ones move.
    for (std::size_t v = 0; v < n; ++v) {
      if (!mask[v]) continue;
      const double mean = (x0[v] - coef * eps[v]) * inv_sqrt_alpha;
      x0[v] = static_cast<float>(mean + sigma * rng.normal());
    }
  }
}

ColorVolume mirror_x(const ColorVolume& c) {
  const Dims d = c.dims();
  ColorVolume out(d);
  for (int ch = 0; ch < ColorVolume::kChannels; ++ch)
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) out.at(ch, d.index(x, y, z)) = c.at(ch, d.nx - 1 - x, y, z);
  return out;
}

Sample mirror_x(const Sample& s) {
  Sample out = s;
  out.v_gt = mirror_x(s.v_gt);
  out.c_gt = mirror_x(s.c_gt);
  out.v_dam = mirror_x(s.v_dam);
  out.c_dam = mirror_x(s.c_dam);
  out.mask = mirror_x(s.mask);
  return out;
}

namespace {

constexpr const char* kValDamageTag = "stage2-val-damage";

// Targets for one object in (1, C, D, H, W) layout.
LossTargets<float> targets_for(const Sample& s, const InpaintInput& in, std::span<const float> eps) {
  const Dims d = s.v_gt.dims();
  const std::size_t n = d.count();
  const nn::Shape one{1, 1, d.nz, d.ny, d.nx}, three{1, 3, d.nz, d.ny, d.nx};
  LossTargets<float> tg;
  tg.c_mask = Array<float>(three, std::vector<float>(in.c_mask.values().begin(), in.c_mask.values().end()));
  tg.c_gt = Array<float>(three, std::vector<float>(s.c_gt.values().begin(), s.c_gt.values().end()));
  tg.mask = Array<float>(one);
  tg.v_gt = Array<float>(one);
  for (std::size_t i = 0; i < n; ++i) {
    tg.mask.data[i] = in.mask[i] ? 1.0F : 0.0F;
    tg.v_gt.data[i] = s.v_gt[i] ? 1.0F : 0.0F;
  }
  tg.eps = Array<float>(one, std::vector<float>(eps.begin(), eps.end()));
  return tg;
}

LossTerms<float> item_loss(const InpaintModel& model, const Sample& s, const DamageMask& mask, int t,
                           std::span<const float> eps, const LossWeights& w, const PerceptualExtractor& ex) {
  InpaintInput in = build_input(s, mask);
  const Array<float> ch0 = noise_occupancy(in.v_mask, s.v_gt, mask, t, model.schedule(), eps);
  std::copy(ch0.data.begin(), ch0.data.end(), in.x.data.begin());
  const auto heads = model.forward(nn::constant(in.x), {t});
  return composite_loss<float>(heads, targets_for(s, in, eps), w, ex, model.config().palette);
}

void accumulate(std::array<double, 6>& acc, const LossTerms<float>& l) {
  acc[0] += l.total_value();
  acc[1] += l.noise;
  acc[2] += l.bce;
  acc[3] += l.color;
  acc[4] += l.perceptual;
  acc[5] += l.prior;
}

}  // namespace

std::array<double, 6> stage2_validation_loss(const InpaintModel& model, const std::vector<const Artifact*>& val,
                                             const LossWeights& w, const DamageConfig& damage,
                                             const PerceptualExtractor& ex, std::uint64_t seed,
                                             const MaskSource& masks) {
  nn::NoGradGuard no_grad;
  std::array<double, 6> acc{};
  int count = 0;
  for (const Artifact* a : val) {
    const Sample s = realize_damage(*a, damage, seed, kValDamageTag, 0);
    if (s.degenerate) continue;
    const DamageMask mask = masks ? masks(s, kValDamageTag, 0) : s.mask;
    Rng trng(derive_seed(seed, "stage2-val-t", 0, a->source_id));
    const int t = static_cast<int>(trng.uniform_int(0, model.config().timesteps - 1));
    const auto eps = draw_noise(derive_seed(seed, "stage2-val-noise", 0, a->source_id), s.v_gt.dims().count());
    accumulate(acc, item_loss(model, s, mask, t, eps, w, ex));
    ++count;
  }
  if (count == 0) throw std::invalid_argument("stage2: validation set is empty");
  for (auto& v : acc) v /= count;
  return acc;
}

Stage2Result train_stage2(const std::vector<const Artifact*>& train, const std::vector<const Artifact*>& val,
                          const InpaintNetConfig& cfg, const LossWeights& w, const DamageConfig& damage,
                          const PerceptualExtractor& ex, std::uint64_t seed, const MaskSource& masks,
                          const std::function<void(const Stage2Epoch&)>& on_epoch) {
  cfg.validate();
  w.validate();
  damage.validate();
  cfg.schedule().check();
  if (train.empty()) throw std::invalid_argument("stage2: training set is empty");
  if (val.empty()) throw std::invalid_argument("stage2: validation set is empty");

  InpaintModel model(cfg, derive_seed(seed, "stage2-init", 0, ""));
  nn::AdamConfig ac;
  ac.lr = cfg.lr;
  nn::Adam<float> adam(ac);
  nn::PlateauScheduler sched{cfg.plateau.factor, cfg.plateau.patience};
  Stage2Result result;
  double best = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<const Artifact*> order = train;
    Rng shuffle(derive_seed(seed, "stage2-shuffle", epoch, ""));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    std::array<double, 6> acc{};
    int count = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::vector<Sample> items;
      std::vector<DamageMask> item_masks;
      for (std::size_t j = start; j < stop; ++j) {
        const Artifact& a = *order[j];
        Sample s = realize_damage(a, damage, seed, "stage2-damage", epoch);
        result.damage_seeds.push_back(s.seed);
        if (s.degenerate) continue;
        DamageMask mask = masks ? masks(s, "stage2-damage", epoch) : s.mask;
        Rng mirror(derive_seed(seed, "stage2-mirror", epoch, a.source_id));
        if (mirror.bernoulli(cfg.mirror_probability)) {
          s = mirror_x(s);
          mask = mirror_x(mask);
        }
        items.push_back(std::move(s));
        item_masks.push_back(std::move(mask));
      }
      if (items.empty()) continue;
      model.net().parameters().zero_grad();
      const float inv = 1.0F / static_cast<float>(items.size());
      for (std::size_t j = 0; j < items.size(); ++j) {
        const Sample& s = items[j];
        Rng trng(derive_seed(seed, "stage2-t", epoch, s.source_id));
        const int t = static_cast<int>(trng.uniform_int(0, cfg.timesteps - 1));
        const auto eps = draw_noise(derive_seed(seed, "stage2-noise", epoch, s.source_id), s.v_gt.dims().count());
        const LossTerms<float> l = item_loss(model, s, item_masks[j], t, eps, w, ex);
        nn::backward(nn::scale(l.total, inv));
        accumulate(acc, l);
        ++count;
      }
      adam.step(model.net().parameters());
    }

    Stage2Epoch log;
    log.epoch = epoch;
    log.lr = adam.lr();
    for (std::size_t k = 0; k < acc.size(); ++k) log.train[k] = count > 0 ? acc[k] / count : 0.0;
    log.val = stage2_validation_loss(model, val, w, damage, ex, seed, masks);
    if (log.val[0] < best) {
      best = log.val[0];
      result.best = model.checkpoint();
      result.best_epoch = epoch;
    }
    adam.set_lr(adam.lr() * sched.step(log.val[0]));
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.model = std::make_unique<InpaintModel>(result.best);
  return result;
}

template std::vector<Var<float>> PerceptualExtractor::features(const Var<float>&) const;
template std::vector<Var<double>> PerceptualExtractor::features(const Var<double>&) const;
template Var<float> perceptual_slice_loss(const Var<float>&, const Array<float>&, const PerceptualExtractor&);
template Var<double> perceptual_slice_loss(const Var<double>&, const Array<double>&, const PerceptualExtractor&);
template LossTerms<float> composite_loss(const std::vector<Var<float>>&, const LossTargets<float>&,
                                         const LossWeights&, const PerceptualExtractor&, const std::array<double, 3>&);
template LossTerms<double> composite_loss(const std::vector<Var<double>>&, const LossTargets<double>&,
                                          const LossWeights&, const PerceptualExtractor&,
                                          const std::array<double, 3>&);

}  // namespace voxinpaint
