// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Usage: voxinpaint_acceptance [--only N,...]
// [--work DIR] [--keep]

#define DOCTEST_CONFIG_IMPLEMENT
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "unit/oracles.hpp"
#include "voxinpaint/dataset.hpp"
#include "voxinpaint/metrics.hpp"
#include "voxinpaint/morphology.hpp"
#include "voxinpaint/pipeline.hpp"
#include "voxinpaint/random.hpp"
#include "voxinpaint/stage2.hpp"

#ifndef VOXINPAINT_SOURCE_DIR
#error "VOXINPAINT_SOURCE_DIR must be defined"
#endif

using namespace voxinpaint;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const fs::path kSource = VOXINPAINT_SOURCE_DIR;

std::vector<Artifact> desk_corpus() {
  const Manifest m = load_manifest(kSource / "data" / "desk_corpus.manifest");
  std::vector<Artifact> out;
  for (const auto& e : m.entries) out.push_back(materialize(e, m.base_dir));
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rows of a CSV file as column-name -> cell maps.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  const auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    return f;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    const auto f = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < f.size(); ++i) row[header[i]] = f[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

Outcome psnr_anchor() {
  const Dims d{};
  VoxelGrid v(d);
  for (int z = 8; z < 24; ++z)
    for (int y = 8; y < 24; ++y)
      for (int x = 8; x < 24; ++x) v.set(x, y, z, true);
  Outcome o{true, ""};
  for (const auto& [mse, expected] : {std::pair{0.00198, 27.03}, std::pair{0.00345, 24.62}}) {
    ColorVolume gt(d), pred(d);
    for (std::size_t i = 0; i < d.count(); ++i)
      for (int c = 0; c < 3; ++c) {
        gt.at(c, i) = v[i] ? 0.25F : 0.0F;
        pred.at(c, i) = v[i] ? static_cast<float>(0.25 + std::sqrt(mse)) : 0.0F;
      }
    const ColorReport r = masked_color_metrics(v, pred, v, gt);
    o.pass = o.pass && r.defined && std::abs(r.psnr_db - expected) <= 0.01;
    o.detail += fmt("MSE %.5f", r.masked_mse) + fmt(" -> %.4f dB; ", r.psnr_db);
  }
  return o;
}

Outcome gradient_suite(int argc, char** argv) {
  doctest::Context ctx;
  ctx.applyCommandLine(argc, argv);
  ctx.setOption("test-case", "*gradients*,*micro network*");
  ctx.setOption("no-intro", true);
  ctx.setOption("no-version", true);
  std::ostringstream sink;
  ctx.setCout(&sink);
  const int failed = ctx.run();
  std::string summary = sink.str();
  const auto pos = summary.find("test cases:");
  summary = pos == std::string::npos ? "" : summary.substr(pos, summary.find('\n', pos) - pos);
  std::string compact;
  for (char c : summary) {
    if (c == '|') c = ',';
    if (c == ' ' && (compact.empty() || compact.back() == ' ')) continue;
    if (c == ',' && !compact.empty() && compact.back() == ' ') compact.pop_back();
    compact += c;
  }
  summary = compact;
  if (failed != 0) std::cerr << sink.str();
  return {failed == 0 && pos != std::string::npos, summary};
}

Outcome oracle_parity() {
  const Dims d{8, 8, 8};
  int morph_bad = 0, morph_n = 0, dist_n = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; morph_n < 200; ++seed, ++morph_n) {
    Rng rng(seed);
    const auto b = oracle::random_bits(d.count(), rng.uniform(0.1, 0.9), 5000 + seed);
    const auto g = oracle::from_bits<VoxelGrid>(b, d);
    const int r = 1 + static_cast<int>(seed % 2);
    const bool use_box = seed % 3 == 0;
    const auto se = use_box ? StructuringElement::box(r) : StructuringElement::sphere(r);
    const auto off = use_box ? oracle::box(r) : oracle::ball(r);
    morph_bad += oracle::bits(erode(g, se)) != oracle::erode(b, d, off);
    morph_bad += oracle::bits(dilate(g, se)) != oracle::dilate(b, d, off);
    morph_bad += oracle::bits(close(g, se)) != oracle::close(b, d, off, r);
  }
  const Dims e{10, 9, 8};
  for (std::uint64_t seed = 0; dist_n < 200; ++seed) {
    const double p = 0.01 + 0.25 * static_cast<double>(seed % 8) / 8.0;
    const auto ab = oracle::random_bits(e.count(), p, 9000 + 2 * seed), bb = oracle::random_bits(e.count(), p, 9001 + 2 * seed);
    const auto a = oracle::from_bits<VoxelGrid>(ab, e), b = oracle::from_bits<VoxelGrid>(bb, e);
    if (a.empty() || b.empty()) continue;
    ++dist_n;
    const auto pa = oracle::points(ab, e), pb = oracle::points(bb, e);
    worst = std::max(worst, std::abs(chamfer(a, b) - oracle::chamfer(pa, pb)));
    const GeomReport f = fscore_1mm(a, b);
    const oracle::Fscore of = oracle::fscore(pa, pb, 1.0);
    worst = std::max({worst, std::abs(f.fscore - of.f), std::abs(f.precision - of.precision),
                      std::abs(f.recall - of.recall)});
  }
  return {morph_bad == 0 && worst <= 1e-9,
          std::to_string(morph_n) + " morphology instances, " + std::to_string(morph_bad) + " mismatches; " +
              std::to_string(dist_n) + " distance instances, max error " + fmt("%.3g", worst)};
}

Outcome damage_algebra(const std::vector<Artifact>& corpus) {
  int n = 0, violations = 0;
  for (std::int64_t epoch = 0; n < 500; ++epoch)
    for (const Artifact& a : corpus) {
      if (n == 500) break;
      const Sample s = realize_damage(a, DamageConfig{}, 77, "acceptance", epoch);
      ++n;
      for (std::size_t i = 0; i < s.v_gt.size(); ++i) {
        violations += s.v_dam[i] && !s.v_gt[i];
        violations += (s.mask[i] || s.v_dam[i]) != s.v_gt[i];
        violations += s.mask[i] && s.v_dam[i];
        for (int c = 0; c < 3; ++c) violations += !s.v_dam[i] && s.c_dam.at(c, i) != 0.0F;
      }
    }
  return {violations == 0, std::to_string(n) + " samples, " + std::to_string(violations) + " violations"};
}

int preservation_violations(const InpaintModel& m, const std::vector<Artifact>& corpus, int count,
                            std::uint64_t seed) {
  int bad = 0;
  for (int k = 0; k < count; ++k) {
    const Artifact& a = corpus[static_cast<std::size_t>(k) % corpus.size()];
    const Sample s = realize_damage(a, DamageConfig{}, seed, "preservation", k);
    DamageMask mask = s.mask;
    if (k % 3 == 2) mask = oracle::from_bits<DamageMask>(oracle::random_bits(mask.size(), 0.15, seed + k), mask.dims());
    const InferenceMode mode = k % 2 == 0 ? InferenceMode::kSingleStep : InferenceMode::kDdpmLoop;
    const InpaintResult r = infer_inpaint(m, s.v_dam, s.c_dam, mask, {mode, seed + static_cast<std::uint64_t>(k), 8});
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) continue;
      bad += r.v_hat[i] != s.v_dam[i];
      for (int c = 0; c < 3; ++c) bad += r.c_composed.at(c, i) != s.c_dam.at(c, i);
    }
  }
  return bad;
}

Outcome schedule_check() {
  const DiffusionSchedule s = DiffusionSchedule::linear();
  bool ok = s.betas.front() == 1e-4 && s.betas.back() == 2e-2 && s.alpha_bars.back() < 0.01;
  for (std::size_t t = 1; t < s.alpha_bars.size(); ++t) ok = ok && s.alpha_bars[t] < s.alpha_bars[t - 1];
  try {
    s.check();
  } catch (const std::exception&) {
    ok = false;
  }
  return {ok, fmt("beta_0 %.17g", s.betas.front()) + fmt(", beta_T-1 %.17g", s.betas.back()) +
                  fmt(", alpha_bar_T-1 %.3e", s.alpha_bars.back())};
}

Outcome determinism(const fs::path& work) {
  std::istringstream cfg_text(
      "[run]\nseed = 11\n[stage1]\nlevels = 2\nbase_channels = 4\nepochs = 2\nlr = 1e-3\n"
      "[stage2]\nwidths = 4, 8\ntime_dim = 8\nepochs = 2\nbatch = 1\n");
  const RunConfig cfg = parse_config(cfg_text, "determinism");
  const Manifest m = load_manifest(kSource / "data" / "desk_corpus.manifest");
  const fs::path a = work / "determinism_a", b = work / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  Pipeline(m, cfg, a).run_all();
  Pipeline(m, cfg, b).run_all();
  int compared = 0, differing = 0;
  for (const char* rel :
       {"reports/metrics.csv", "reports/summary.csv", "models/stage1.vckpt", "models/stage2.vckpt"}) {
    ++compared;
    const std::string x = read_file(a / rel), y = read_file(b / rel);
    differing += x.empty() || x != y;
  }
  return {differing == 0, std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ"};
}

Outcome symmetry_fixture() {
  const Dims d{};
  VoxelGrid gt(d);
  ColorVolume cg(d);
  for (int z = 4; z < 28; ++z)
    for (int y = 6; y < 22; ++y)
      for (int x = 7; x < 25; ++x) {
        const int dx = std::min(x, 31 - x);
        if ((dx + y + z) % 7 == 0 && y > 8) continue;  // symmetric cavities
        gt.set(x, y, z, true);
        for (int c = 0; c < 3; ++c)
          cg.at(c, d.index(x, y, z)) = static_cast<float>((dx * 5 + y * 3 + z + c * 11) % 23) / 22.0F;
      }
  DamageMask mask(d);
  Rng rng(4);
  for (std::size_t i = 0; i < d.count(); ++i) {
    const int x = static_cast<int>(i % 32);
    if (gt[i] && x < 16 && rng.bernoulli(0.6)) mask.set(i, true);
  }
  VoxelGrid vd = gt;
  ColorVolume cd = cg;
  for (std::size_t i = 0; i < d.count(); ++i)
    if (mask[i]) {
      vd.set(i, false);
      for (int c = 0; c < 3; ++c) cd.at(c, i) = 0.0F;
    }
  const SymmetryFill f = symmetry_baseline(vd, cd, mask);
  std::size_t eligible = 0, restored = 0;
  for (int z = 0; z < 32; ++z)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const std::size_t i = d.index(x, y, z), m = d.index(31 - x, y, z);
        if (!mask[i] || mask[m] || !vd[m]) continue;
        ++eligible;
        bool ok = f.result.v_hat[i];
        for (int c = 0; c < 3; ++c) ok = ok && f.result.c_hat.at(c, i) == cg.at(c, i);
        restored += ok ? 1 : 0;
      }
  return {eligible > 0 && restored == eligible && f.axis == MirrorAxis::kX,
          std::to_string(restored) + "/" + std::to_string(eligible) + " masked voxels with intact partners restored"};
}

// Desk-scale training runs shared by criteria 5, 6 and 7.
struct DeskRun {
  std::uint64_t seed;
  fs::path dir;
  std::vector<double> stage1_val, stage2_val;
  double model_f = 0, model_chamfer = 0, base_f = 0, base_chamfer = 0;
};

RunConfig desk_config(std::uint64_t seed, MaskSourceKind masks) {
  RunConfig cfg = load_config(kSource / "configs" / "desk.cfg");
  cfg.seed = seed;
  cfg.mask_source = masks;
  return cfg;
}

DeskRun desk_run(std::uint64_t seed, const fs::path& work, bool keep) {
  DeskRun r{seed, work / ("desk_seed" + std::to_string(seed)), {}, {}};
  if (!keep) fs::remove_all(r.dir);
  const Manifest m = load_manifest(kSource / "data" / "desk_corpus.manifest");
  Pipeline p(m, desk_config(seed, MaskSourceKind::kGroundTruth), r.dir, &std::cerr);
  p.run_all();
  for (const auto& row : read_csv(r.dir / "models" / "stage1_log.csv")) r.stage1_val.push_back(std::stod(row.at("val_bce")));
  for (const auto& row : read_csv(r.dir / "models" / "stage2_log.csv")) r.stage2_val.push_back(std::stod(row.at("val_total")));
  for (const auto& row : read_csv(p.summary_path())) {
    if (row.at("split") != "val") continue;
    if (row.at("method") == "diffusion") {
      r.model_f = std::stod(row.at("fscore"));
      r.model_chamfer = std::stod(row.at("chamfer_mm"));
    } else if (row.at("method") == "symmetry") {
      r.base_f = std::stod(row.at("fscore"));
      r.base_chamfer = std::stod(row.at("chamfer_mm"));
    }
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work = fs::current_path() / "acceptance_work";
  bool keep = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string n; std::getline(ss, n, ',');) only.insert(std::stoi(n));
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--keep") {
      keep = true;
    }
  }
  const auto wanted = [&](int c) { return only.empty() || only.count(c) > 0; };
  fs::create_directories(work);

  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %2d %-28s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "psnr-anchor", psnr_anchor);
  report(2, "gradient-suite", [&] { return gradient_suite(1, argv); });
  report(3, "oracle-parity", oracle_parity);
  const std::vector<Artifact> corpus = wanted(4) || wanted(5) ? desk_corpus() : std::vector<Artifact>{};
  report(4, "damage-algebra", [&] { return damage_algebra(corpus); });

  std::vector<DeskRun> runs;
  if (wanted(5) || wanted(6) || wanted(7)) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto t0 = std::chrono::steady_clock::now();
      runs.push_back(desk_run(seed, work, keep));
      std::fprintf(stderr, "desk run seed %llu: %.1fs\n", static_cast<unsigned long long>(seed),
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
  }

  report(5, "preservation", [&] {
    const InpaintModel untrained(desk_config(1, MaskSourceKind::kGroundTruth).stage2, 99);
    const InpaintModel trained(nn::Checkpoint::load(runs.front().dir / "models" / "stage2.vckpt"));
    const int bad = preservation_violations(untrained, corpus, 50, 500) + preservation_violations(trained, corpus, 50, 600);
    return Outcome{bad == 0, "100 inferences (untrained and trained, single and ddpm), " + std::to_string(bad) +
                                 " violations"};
  });

  report(6, "smoke-descent", [&] {
    bool ok = true;
    std::string detail;
    for (const DeskRun& r : runs) {
      const bool s1 = r.stage1_val.size() >= 10 && r.stage1_val[9] < r.stage1_val[0];
      const bool s2 = r.stage2_val.size() >= 15 && r.stage2_val[14] < r.stage2_val[0];
      ok = ok && s1 && s2;
      detail += "seed " + std::to_string(r.seed) + fmt(": bce %.4f", r.stage1_val.empty() ? NAN : r.stage1_val[0]) +
                fmt("->%.4f", r.stage1_val.size() >= 10 ? r.stage1_val[9] : NAN) +
                fmt(", total %.3f", r.stage2_val.empty() ? NAN : r.stage2_val[0]) +
                fmt("->%.3f; ", r.stage2_val.size() >= 15 ? r.stage2_val[14] : NAN);
    }
    return Outcome{ok && runs.size() == 3, detail};
  });

  report(7, "beats-baseline", [&] {
    double mf = 0, mc = 0, bf = 0, bc = 0;
    for (const DeskRun& r : runs) {
      mf += r.model_f / 3;
      mc += r.model_chamfer / 3;
      bf += r.base_f / 3;
      bc += r.base_chamfer / 3;
    }
    return Outcome{runs.size() == 3 && mf > bf && mc < bc,
                   fmt("model F %.4f", mf) + fmt(" Chamfer %.3f mm", mc) + fmt(" vs baseline F %.4f", bf) +
                       fmt(" Chamfer %.3f mm", bc)};
  });

  report(8, "schedule", schedule_check);
  report(9, "determinism", [&] { return determinism(work); });
  report(10, "symmetry-fixture", symmetry_fixture);

  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
