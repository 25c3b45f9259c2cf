// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "unit/gradcheck.hpp"
#include "unit/oracles.hpp"
#include "voxinpaint/nn/ops.hpp"
#include "voxinpaint/shapes.hpp"
#include "voxinpaint/stage2.hpp"

using namespace voxinpaint;
using nn::Array;
using nn::Var;

namespace {

Artifact make_artifact(ShapeKind kind, std::uint64_t seed, const std::string& id, Split split = Split::kTrain) {
  auto sh = generate_procedural_shape(kind, seed);
  return {id, sh.occupancy, sh.color, split};
}

Sample damaged(std::uint64_t seed) {
  static const Artifact a = make_artifact(ShapeKind::kBoxWithPattern, 12, "box");
  return realize_damage(a, DamageConfig{}, seed, "test", 0);
}

InpaintNetConfig tiny_config() {
  InpaintNetConfig cfg;
  cfg.widths = {4, 8};
  cfg.time_dim = 8;
  cfg.batch = 1;
  return cfg;
}

DamageMask random_mask(const Dims& d, double p, std::uint64_t seed) {
  return oracle::from_bits<DamageMask>(oracle::random_bits(d.count(), p, seed), d);
}

// Gives the zero-initialized heads random weights so outputs depend on the trunk.
void randomize_heads(InpaintModel& m, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, v] : m.net().parameters().entries())
    if (name.starts_with("head"))
      for (auto& x : v.mutable_value().data) x = static_cast<float>(rng.uniform(-0.5, 0.5));
}

}  // namespace

TEST_CASE("linear schedule") {
  const DiffusionSchedule s = DiffusionSchedule::linear();
  REQUIRE(s.betas.size() == 1000);
  CHECK(s.betas.front() == 1e-4);
  CHECK(s.betas.back() == 2e-2);
  for (int t : {1, 250, 500, 998})
    CHECK(std::abs(s.betas[t] - (1e-4 + t / 999.0 * (2e-2 - 1e-4))) < 1e-15);
  double prod = 1;
  for (int t = 0; t < 1000; ++t) {
    prod *= 1 - s.betas[t];
    CHECK(s.alphas[t] == 1 - s.betas[t]);
    CHECK(std::abs(s.alpha_bars[t] - prod) <= 1e-15);
  }
  CHECK(s.alpha_bars.front() > 0.999);
  CHECK(s.alpha_bars.back() < 0.01);
  CHECK_NOTHROW(s.check());
  CHECK_THROWS_AS(DiffusionSchedule::linear(1000, 1e-4, 1e-3).check(), std::logic_error);
  CHECK_THROWS_AS(DiffusionSchedule::linear(1, 1e-4, 2e-2), std::invalid_argument);
  CHECK_THROWS_AS(DiffusionSchedule::linear(10, 2e-2, 1e-4), std::invalid_argument);
}

TEST_CASE("input assembly") {
  const Sample s = damaged(1);
  const Dims d = s.v_gt.dims();
  const std::size_t n = d.count();

  const InpaintInput none = build_input(s, DamageMask(d));
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(none.x.data[i] == (s.v_dam[i] ? 1.0F : 0.0F));
    CHECK(none.x.data[n + i] == 0.0F);
  }
  CHECK(std::equal(s.c_dam.values().begin(), s.c_dam.values().end(), none.x.data.begin() + 2 * n));

  const InpaintInput all = build_input(s, DamageMask(d, 1));
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(all.x.data[i] == 0.0F);
    CHECK(all.x.data[n + i] == 1.0F);
    for (int c = 0; c < 3; ++c) CHECK(all.x.data[(2 + c) * n + i] == 0.0F);
  }

  const DamageMask m = random_mask(d, 0.3, 7);
  const InpaintInput in = build_input(s, m);
  CHECK(in.x.shape == nn::Shape{1, 5, 32, 32, 32});
  int bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bad += in.x.data[i] != ((s.v_dam[i] && !m[i]) ? 1.0F : 0.0F);
    bad += in.v_mask[i] != (s.v_dam[i] && !m[i]);
    for (int c = 0; c < 3; ++c) bad += in.c_mask.at(c, i) != (m[i] ? 0.0F : s.c_dam.at(c, i));
  }
  CHECK(bad == 0);
}

TEST_CASE("masked forward noising") {
  const Sample s = damaged(2);
  const Dims d = s.v_gt.dims();
  const DiffusionSchedule sched = DiffusionSchedule::linear();
  const InpaintInput in = build_input(s, s.mask);
  const auto eps = draw_noise(3, d.count());

  const Array<float> t0 = noise_occupancy(in.v_mask, s.v_gt, s.mask, 0, sched, eps);
  const double bound = std::sqrt(1 - sched.alpha_bars[0]);
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (s.mask[i])
      CHECK(std::abs(t0.data[i] - (s.v_gt[i] ? 1.0 : 0.0)) <= (1 - std::sqrt(sched.alpha_bars[0])) + bound * std::abs(eps[i]) + 1e-6);
    else
      CHECK(t0.data[i] == (in.v_mask[i] ? 1.0F : 0.0F));
  }

  const DamageMask empty(d);
  const InpaintInput clean = build_input(s, empty);
  for (int t : {0, 400, 999}) {
    const Array<float> c = noise_occupancy(clean.v_mask, s.v_gt, empty, t, sched, draw_noise(t + 10, d.count()));
    CHECK(std::equal(c.data.begin(), c.data.end(), clean.x.data.begin()));
  }
  CHECK_THROWS_AS((void)noise_occupancy(in.v_mask, s.v_gt, s.mask, 1000, sched, eps), std::invalid_argument);
}

TEST_CASE("noising mean over many draws") {
  const Dims d{4, 4, 4};
  VoxelGrid gt(d);
  DamageMask mask(d, 1);
  for (std::size_t i = 0; i < d.count(); i += 2) gt.set(i, true);
  const VoxelGrid vm(d);
  const DiffusionSchedule sched = DiffusionSchedule::linear();
  const int t = 300, draws = 10000;
  std::vector<double> sum(d.count(), 0.0);
  for (int k = 0; k < draws; ++k) {
    const Array<float> c = noise_occupancy(vm, gt, mask, t, sched, draw_noise(1000 + k, d.count()));
    for (std::size_t i = 0; i < d.count(); ++i) sum[i] += c.data[i];
  }
  const double sigma = std::sqrt(1 - sched.alpha_bars[t]);
  for (std::size_t i = 0; i < d.count(); ++i) {
    const double expected = std::sqrt(sched.alpha_bars[t]) * (gt[i] ? 1.0 : 0.0);
    CHECK(std::abs(sum[i] / draws - expected) < 3 * sigma / 100);
  }
}

TEST_CASE("inpainting network forward contracts") {
  InpaintModel m(tiny_config(), 1);
  const Sample s = damaged(3);
  const InpaintInput in = build_input(s, s.mask);
  auto heads = m.forward(nn::constant(in.x), {10});
  REQUIRE(heads.size() == 3);
  CHECK(heads[0].shape() == nn::Shape{1, 1, 32, 32, 32});
  CHECK(heads[1].shape() == nn::Shape{1, 1, 32, 32, 32});
  CHECK(heads[2].shape() == nn::Shape{1, 3, 32, 32, 32});

  randomize_heads(m, 5);
  const auto a = m.forward(nn::constant(in.x), {10});
  const auto b = m.forward(nn::constant(in.x), {900});
  double diff = 0;
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < a[k].value().size(); ++i) {
      const double e = a[k].value().data[i] - b[k].value().data[i];
      diff += e * e;
    }
  CHECK(diff > 0);

  CHECK_THROWS_AS((void)m.forward(nn::constant(Array<float>({1, 4, 32, 32, 32})), {0}), nn::ShapeError);
  CHECK_THROWS_AS((void)m.forward(nn::constant(in.x), {1000}), std::invalid_argument);
  CHECK_THROWS_AS((void)m.forward(nn::constant(in.x), {-1}), std::invalid_argument);
}

TEST_CASE("default widths") {
  const InpaintNetConfig cfg;
  CHECK(cfg.widths == std::vector<int>{32, 64, 96, 128});
  const nn::UNetConfig u = cfg.unet();
  CHECK(u.spatial == 3);
  CHECK(u.in_channels == 5);
  CHECK(u.heads == std::vector<int>{1, 1, 3});
  CHECK(u.residual);
  CHECK(u.time_dim == 128);
}

namespace {

template <class T>
LossTargets<T> targets_from(const Sample& s, const InpaintInput& in, const std::vector<float>& eps) {
  const Dims d = s.v_gt.dims();
  const nn::Shape one{1, 1, d.nz, d.ny, d.nx}, three{1, 3, d.nz, d.ny, d.nx};
  LossTargets<T> tg{Array<T>(three), Array<T>(one), Array<T>(one), Array<T>(three), Array<T>(one)};
  for (std::size_t i = 0; i < d.count(); ++i) {
    tg.mask.data[i] = in.mask[i] ? 1 : 0;
    tg.v_gt.data[i] = s.v_gt[i] ? 1 : 0;
    tg.eps.data[i] = eps[i];
    for (int c = 0; c < 3; ++c) {
      tg.c_mask.data[c * d.count() + i] = in.c_mask.at(c, i);
      tg.c_gt.data[c * d.count() + i] = s.c_gt.at(c, i);
    }
  }
  return tg;
}

}  // namespace

TEST_CASE("composite loss at the optimum") {
  const Sample s = damaged(4);
  const InpaintInput in = build_input(s, s.mask);
  const auto eps = draw_noise(8, s.v_gt.dims().count());
  const auto tg = targets_from<double>(s, in, eps);
  Array<double> logits = tg.v_gt, residual = tg.c_gt;
  for (auto& v : logits.data) v = v > 0 ? 30.0 : -30.0;
  for (std::size_t i = 0; i < residual.size(); ++i) residual.data[i] -= tg.c_mask.data[i];
  const auto ex = PerceptualExtractor::random(1);
  const LossTerms<double> l = composite_loss<double>(
      {nn::constant(tg.eps), nn::constant(logits), nn::constant(residual)}, tg, LossWeights{}, ex, {0.92, 0.90, 0.85});
  CHECK(l.noise == 0.0);
  CHECK(l.bce <= 2e-7);
  CHECK(l.color == 0.0);
  CHECK(l.perceptual == 0.0);
  CHECK(l.bce >= 0);
  CHECK(l.prior >= 0);
}

TEST_CASE("composite loss with an empty mask and recomposition") {
  const Sample s = damaged(5);
  const Dims d = s.v_gt.dims();
  const auto eps = draw_noise(9, d.count());
  const auto ex = PerceptualExtractor::random(2);
  Rng rng(6);
  const auto rand = [&](const nn::Shape& sh) {
    Array<double> a(sh);
    for (auto& v : a.data) v = rng.uniform(-1, 1);
    return a;
  };
  const nn::Shape one{1, 1, 32, 32, 32}, three{1, 3, 32, 32, 32};

  const InpaintInput none = build_input(s, DamageMask(d));
  const auto tg0 = targets_from<double>(s, none, eps);
  const auto l0 = composite_loss<double>({nn::constant(rand(one)), nn::constant(rand(one)), nn::constant(rand(three))},
                                         tg0, LossWeights{}, ex, {0.92, 0.90, 0.85});
  CHECK(l0.color == 0.0);
  CHECK(l0.prior == 0.0);

  LossWeights w;
  w.noise = 0.7;
  w.bce = 1.3;
  w.color = 20;
  w.perceptual = 0.1;
  w.prior = 0.1;
  const InpaintInput in = build_input(s, s.mask);
  const auto tg = targets_from<double>(s, in, eps);
  for (int k = 0; k < 3; ++k) {
    const auto l = composite_loss<double>(
        {nn::constant(rand(one)), nn::constant(rand(one)), nn::constant(rand(three))}, tg, w, ex, {0.92, 0.90, 0.85});
    const double manual =
        w.noise * l.noise + w.bce * l.bce + w.color * l.color + w.perceptual * l.perceptual + w.prior * l.prior;
    CHECK(std::abs(l.total_value() - manual) < 1e-9);
    for (double v : {l.noise, l.bce, l.color, l.perceptual, l.prior}) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0);
    }
  }
}

TEST_CASE("perceptual slice loss") {
  Rng rng(7);
  const auto rand = [&] {
    Array<double> a({1, 3, 4, 8, 8});
    for (auto& v : a.data) v = rng.uniform();
    return a;
  };
  const Array<double> a = rand(), b = rand(), dlt = rand();
  const auto ex = PerceptualExtractor::random(3);
  CHECK(perceptual_slice_loss<double>(nn::constant(a), a, ex).item() == 0.0);
  const double ab = perceptual_slice_loss<double>(nn::constant(a), b, ex).item();
  const double ba = perceptual_slice_loss<double>(nn::constant(b), a, ex).item();
  CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
  CHECK(ab > 0);

  const auto lin = PerceptualExtractor::random(3, true);
  Array<double> p1 = a, p2 = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    p1.data[i] += dlt.data[i] - 0.5;
    p2.data[i] += 2 * (dlt.data[i] - 0.5);
  }
  const double l1 = perceptual_slice_loss<double>(nn::constant(p1), a, lin).item();
  const double l2 = perceptual_slice_loss<double>(nn::constant(p2), a, lin).item();
  CHECK(l2 / l1 == doctest::Approx(4.0).epsilon(1e-9));

  CHECK_THROWS_AS((void)perceptual_slice_loss<double>(nn::constant(Array<double>({1, 4, 4, 8, 8})),
                                                      Array<double>({1, 4, 4, 8, 8}), ex),
                  nn::ShapeError);
  nn::Checkpoint ck;
  ck.put("feat0.weight", Array<float>({8, 4, 3, 3}));
  ck.put("feat0.bias", Array<float>({8}));
  CHECK_THROWS_AS(PerceptualExtractor::from_checkpoint(ck), nn::ShapeError);

  nn::Checkpoint good;
  good.put("feat0.weight", Array<float>({2, 3, 3, 3}, 0.1F));
  good.put("feat0.bias", Array<float>({2}));
  const auto ext = PerceptualExtractor::from_checkpoint(good);
  CHECK(ext.layers() == 1);
  CHECK(perceptual_slice_loss<double>(nn::constant(a), b, ext).item() > 0);
}

TEST_CASE("output composition") {
  const Sample s = damaged(6);
  const Dims d = s.v_gt.dims();
  const std::size_t n = d.count();
  const InpaintInput in = build_input(s, s.mask);
  Array<float> logits({1, 1, 32, 32, 32}, 5.0F), zero({1, 3, 32, 32, 32});

  const InpaintResult r0 = compose_output(logits, zero, in);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) CHECK(r0.c_composed.at(c, i) == in.c_mask.at(c, i));

  Rng rng(1);
  Array<float> residual({1, 3, 32, 32, 32});
  for (auto& v : residual.data) v = static_cast<float>(rng.uniform(-3, 3));
  for (auto& v : logits.data) v = static_cast<float>(rng.uniform(-1, 1));
  const InpaintResult r = compose_output(logits, residual, in);
  int bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.mask[i]) {
      bad += r.v_hat[i] != in.v_mask[i];
      for (int c = 0; c < 3; ++c) bad += r.c_composed.at(c, i) != s.c_dam.at(c, i);
    } else {
      bad += r.v_hat[i] != (1.0F / (1.0F + std::exp(-logits.data[i])) >= 0.5F);
      for (int c = 0; c < 3; ++c) {
        const float expect = std::clamp(residual.data[c * n + i], 0.0F, 1.0F);
        bad += r.c_composed.at(c, i) != expect;
        if (residual.data[c * n + i] > 1.0F) bad += r.c_composed.at(c, i) != 1.0F;
      }
    }
    for (int c = 0; c < 3; ++c) bad += r.c_hat.at(c, i) != (r.v_hat[i] ? r.c_composed.at(c, i) : 0.0F);
  }
  CHECK(bad == 0);
}

TEST_CASE("inference modes") {
  CHECK(parse_inference_mode("single") == InferenceMode::kSingleStep);
  CHECK(parse_inference_mode("ddpm") == InferenceMode::kDdpmLoop);
  CHECK_THROWS_AS(parse_inference_mode("ancestral"), std::invalid_argument);

  InpaintModel m(tiny_config(), 2);
  randomize_heads(m, 3);
  const Artifact a = make_artifact(ShapeKind::kVase, 40, "intact");
  const DamageMask empty(a.occupancy.dims());
  for (InferenceMode mode : {InferenceMode::kSingleStep, InferenceMode::kDdpmLoop}) {
    InferenceOptions opt{mode, 5, 4};
    const InpaintResult r = infer_inpaint(m, a.occupancy, a.color, empty, opt);
    CHECK(r.v_hat == a.occupancy);
    CHECK(std::equal(r.c_hat.values().begin(), r.c_hat.values().end(), a.color.values().begin()));
  }

  const Sample s = damaged(7);
  const InferenceOptions ddpm{InferenceMode::kDdpmLoop, 11, 5};
  const InpaintResult x = infer_inpaint(m, s.v_dam, s.c_dam, s.mask, ddpm);
  const InpaintResult y = infer_inpaint(m, s.v_dam, s.c_dam, s.mask, ddpm);
  CHECK(x.v_hat == y.v_hat);
  CHECK(x.occupancy_logits == y.occupancy_logits);
  CHECK(x.color_residual == y.color_residual);
  const InpaintResult z = infer_inpaint(m, s.v_dam, s.c_dam, s.mask, {InferenceMode::kDdpmLoop, 12, 5});
  CHECK(z.occupancy_logits != x.occupancy_logits);
  CHECK_THROWS_AS((void)infer_inpaint(m, s.v_dam, s.c_dam, s.mask, {InferenceMode::kDdpmLoop, 1, 1}),
                  std::invalid_argument);
}

TEST_CASE("full-length reverse loop on a short schedule") {
  InpaintNetConfig cfg = tiny_config();
  cfg.timesteps = 20;
  cfg.beta_end = 0.3;
  InpaintModel m(cfg, 4);
  randomize_heads(m, 4);
  const Sample s = damaged(8);
  const InpaintResult a = infer_inpaint(m, s.v_dam, s.c_dam, s.mask, {InferenceMode::kDdpmLoop, 3, 0});
  const InpaintResult b = infer_inpaint(m, s.v_dam, s.c_dam, s.mask, {InferenceMode::kDdpmLoop, 3, 0});
  CHECK(a.occupancy_logits == b.occupancy_logits);
}

TEST_CASE("preservation outside the mask") {
  InpaintModel m(tiny_config(), 6);
  randomize_heads(m, 6);
  int bad = 0;
  for (int k = 0; k < 6; ++k) {
    const Sample s = damaged(20 + k);
    const DamageMask mask = k % 2 ? s.mask : random_mask(s.v_gt.dims(), 0.2, k);
    const InferenceMode mode = k % 3 ? InferenceMode::kSingleStep : InferenceMode::kDdpmLoop;
    const InpaintResult r = infer_inpaint(m, s.v_dam, s.c_dam, mask, {mode, std::uint64_t(k), 3});
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) continue;
      bad += r.v_hat[i] != s.v_dam[i];
      for (int c = 0; c < 3; ++c) bad += r.c_composed.at(c, i) != s.c_dam.at(c, i);
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("mirroring commutes with input assembly") {
  const Sample s = damaged(9);
  const Sample ms = mirror_x(s);
  CHECK(mirror_x(ms).v_gt == s.v_gt);
  const ColorVolume back = mirror_x(ms.c_gt);
  CHECK(std::equal(back.values().begin(), back.values().end(), s.c_gt.values().begin()));
  const InpaintInput a = build_input(ms, ms.mask);
  const InpaintInput b = build_input(s, s.mask);
  const Dims d = s.v_gt.dims();
  int bad = 0;
  for (int ch = 0; ch < 5; ++ch)
    for (int z = 0; z < 32; ++z)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          bad += a.x.data[ch * d.count() + d.index(x, y, z)] != b.x.data[ch * d.count() + d.index(31 - x, y, z)];
  CHECK(bad == 0);
  CHECK(ms.mask == mirror_x(s.mask));
  CHECK(ms.v_dam == mirror_x(s.v_dam));
}

TEST_CASE("inpainting checkpoint round trip") {
  InpaintModel m(tiny_config(), 9);
  randomize_heads(m, 9);
  std::stringstream buf;
  m.checkpoint().write(buf);
  const InpaintModel r(nn::Checkpoint::read(buf));
  CHECK(r.config().beta_start == 1e-4);
  CHECK(r.config().beta_end == 2e-2);
  CHECK(r.config().timesteps == 1000);
  CHECK(r.config().widths == m.config().widths);
  CHECK(r.schedule().betas == m.schedule().betas);
  const Sample s = damaged(10);
  const InpaintInput in = build_input(s, s.mask);
  const auto a = m.forward(nn::constant(in.x), {77});
  const auto b = r.forward(nn::constant(in.x), {77});
  for (int k = 0; k < 3; ++k) CHECK(a[k].value() == b[k].value());
  CHECK_THROWS_AS(InpaintModel(nn::Checkpoint{"mask_unet", {}}), std::invalid_argument);
}

TEST_CASE("stage 2 smoke training") {
  const std::vector<Artifact> corpus{make_artifact(ShapeKind::kSphere, 51, "a"),
                                     make_artifact(ShapeKind::kVase, 52, "b"),
                                     make_artifact(ShapeKind::kBoxWithPattern, 53, "c", Split::kVal)};
  InpaintNetConfig cfg = tiny_config();
  cfg.epochs = 10;
  const auto train = select(corpus, Split::kTrain), val = select(corpus, Split::kVal);
  const auto ex = PerceptualExtractor::random(4);
  const Stage2Result r = train_stage2(train, val, cfg, LossWeights{}, DamageConfig{}, ex, 77);
  REQUIRE(r.log.size() == 10);
  CHECK(r.log.back().train[0] < r.log.front().train[0]);
  CHECK(r.damage_seeds.size() == 20);
  CHECK(std::set<std::uint64_t>(r.damage_seeds.begin(), r.damage_seeds.end()).size() == 20);

  const InpaintModel reloaded(r.best);
  const auto v = stage2_validation_loss(reloaded, val, LossWeights{}, DamageConfig{}, ex, 77);
  CHECK(v == r.log[r.best_epoch - 1].val);
}

TEST_CASE("stage 2 micro network gradients") {
  nn::UNetConfig u = tiny_config().unet();
  u.widths = {2, 3};
  u.time_dim = 4;
  const Dims d{8, 8, 8};
  const auto ex = PerceptualExtractor::random(5);
  for (int s = 0; s < 5; ++s) {
    nn::UNet<double> net(u, 500 + s);
    Rng rng(600 + s);
    Array<double> x = gradcheck::random_array({1, 5, 8, 8, 8}, rng, 0, 1);
    LossTargets<double> tg{Array<double>({1, 3, 8, 8, 8}), Array<double>({1, 1, 8, 8, 8}),
                           Array<double>({1, 1, 8, 8, 8}), Array<double>({1, 3, 8, 8, 8}),
                           gradcheck::random_array({1, 1, 8, 8, 8}, rng)};
    for (std::size_t i = 0; i < d.count(); ++i) {
      tg.mask.data[i] = rng.bernoulli(0.3) ? 1 : 0;
      tg.v_gt.data[i] = tg.mask.data[i] > 0 || rng.bernoulli(0.3) ? 1 : 0;
      for (int c = 0; c < 3; ++c) {
        tg.c_gt.data[c * d.count() + i] = rng.uniform();
        tg.c_mask.data[c * d.count() + i] = tg.mask.data[i] > 0 ? 0 : rng.uniform();
      }
    }
    const int t = static_cast<int>(rng.uniform_int(0, 999));
    auto r = gradcheck::check_parameter(
        net.parameters().find("enc0.a.weight"),
        [&] {
          return composite_loss<double>(net.forward(nn::constant(x), {t}), tg, LossWeights{}, ex, {0.92, 0.90, 0.85})
              .total;
        },
        1e-6);
    CHECK(r.rel_error < 1e-3);
    CHECK(r.analytic_norm > 0);
  }
}
