// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "voxinpaint/mesh.hpp"
#include "voxinpaint/random.hpp"
#include "voxinpaint/shapes.hpp"
#include "voxinpaint/vvol.hpp"

namespace voxinpaint {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kProcedural = "procedural:";

struct ProceduralSpec {
  ShapeKind kind;
  std::uint64_t seed;
};

ProceduralSpec parse_procedural(std::string_view src) {
  src.remove_prefix(kProcedural.size());
  const auto colon = src.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("expected procedural:<kind>:<seed>");
  const ShapeKind kind = parse_shape_kind(src.substr(0, colon));
  const std::string_view num = src.substr(colon + 1);
  std::uint64_t seed = 0;
  const auto r = std::from_chars(num.data(), num.data() + num.size(), seed);
  if (r.ec != std::errc{} || r.ptr != num.data() + num.size())
    throw std::invalid_argument("bad procedural seed '" + std::string(num) + "'");
  return {kind, seed};
}

bool is_procedural(const std::string& s) { return s.starts_with(kProcedural); }

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<Stage> dependencies(Stage s, MaskSourceKind masks) {
  const bool predicted = masks == MaskSourceKind::kPredicted;
  switch (s) {
    case Stage::kVoxelize: return {};
    case Stage::kSynthDamage: return {Stage::kVoxelize};
    case Stage::kTrainMask: return {Stage::kVoxelize};
    case Stage::kPredictMask: return {Stage::kSynthDamage, Stage::kTrainMask};
    case Stage::kTrainInpaint: return {Stage::kVoxelize};
    case Stage::kInpaint:
      if (predicted) return {Stage::kSynthDamage, Stage::kPredictMask, Stage::kTrainInpaint};
      return {Stage::kSynthDamage, Stage::kTrainInpaint};
    case Stage::kBaselineSymmetry:
      if (predicted) return {Stage::kSynthDamage, Stage::kPredictMask};
      return {Stage::kSynthDamage};
    case Stage::kEvaluate:
      if (predicted) return {Stage::kSynthDamage, Stage::kPredictMask, Stage::kInpaint, Stage::kBaselineSymmetry};
      return {Stage::kSynthDamage, Stage::kInpaint, Stage::kBaselineSymmetry};
    case Stage::kReport: return {Stage::kEvaluate};
  }
  return {};
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mask_iou(const DamageMask& a, const DamageMask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

PerceptualExtractor make_extractor(const RunConfig& cfg, const fs::path& base) {
  if (cfg.perceptual_weights.empty()) return PerceptualExtractor::random(derive_seed(cfg.seed, "perceptual", 0, ""));
  fs::path p = cfg.perceptual_weights;
  if (p.is_relative()) p = base / p;
  return PerceptualExtractor::from_checkpoint(nn::Checkpoint::load(p));
}

void ensure_parent(const fs::path& p) { fs::create_directories(p.parent_path()); }

// Config lines a stage reads, as "section.key = value"; other settings do
// not invalidate its outputs.
std::string relevant_config(Stage s, const RunConfig& cfg) {
  std::vector<std::string> keys;
  switch (s) {
    case Stage::kVoxelize: keys = {"run.resolution"}; break;
    case Stage::kSynthDamage: keys = {"run.seed", "damage."}; break;
    case Stage::kTrainMask: keys = {"run.seed", "stage1.", "damage."}; break;
    case Stage::kPredictMask: keys = {"run.seed", "stage1.indicator_dropout"}; break;
    case Stage::kTrainInpaint: keys = {"run.seed", "run.perceptual_weights", "stage2.", "loss.", "damage."}; break;
    case Stage::kInpaint: keys = {"run.seed", "run.mask_source", "run.inference_mode", "run.ddpm_steps"}; break;
    case Stage::kBaselineSymmetry:
    case Stage::kEvaluate: keys = {"run.mask_source"}; break;
    case Stage::kReport: break;
  }
  std::istringstream dump(dump_config(cfg));
  std::string line, section, out;
  while (std::getline(dump, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const std::string qualified = section + "." + line;
    for (const std::string& k : keys)
      if (qualified.starts_with(k.back() == '.' ? k : k + " ")) out += qualified + '\n';
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

void Manifest::validate(bool training) const {
  std::set<std::string> ids;
  int counts[3] = {0, 0, 0};
  for (const ManifestEntry& e : entries) {
    if (e.source_id.empty()) throw ManifestError("empty source_id");
    if (e.source_id.find_first_of("/\\ \t") != std::string::npos)
      throw ManifestError("source_id '" + e.source_id + "' may not contain path separators or spaces");
    if (!ids.insert(e.source_id).second) throw ManifestError("duplicate source_id '" + e.source_id + "'");
    if (is_procedural(e.source)) {
      try {
        (void)parse_procedural(e.source);
      } catch (const std::exception& ex) {
        throw ManifestError(e.source_id + ": " + ex.what());
      }
    } else if (e.source.empty()) {
      throw ManifestError(e.source_id + ": empty source");
    }
    ++counts[static_cast<int>(e.split)];
  }
  if (entries.empty()) throw ManifestError("manifest has no entries");
  if (training)
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest})
      if (counts[static_cast<int>(s)] == 0) throw ManifestError("split '" + to_string(s) + "' is empty");
}

std::string Manifest::canonical() const {
  std::string out;
  for (const ManifestEntry& e : entries) out += e.source_id + ' ' + to_string(e.split) + ' ' + e.source + '\n';
  return out;
}

Manifest parse_manifest(std::istream& in, const fs::path& base_dir, const std::string& origin) {
  Manifest m;
  m.base_dir = base_dir;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string id, split, source, extra;
    if (!(ls >> id)) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (!(ls >> split >> source)) throw ManifestError(where + "expected 'source_id split source'");
    if (ls >> extra) throw ManifestError(where + "unexpected trailing field '" + extra + "'");
    ManifestEntry e;
    e.source_id = id;
    e.source = source;
    try {
      e.split = parse_split(split);
    } catch (const std::exception& ex) {
      throw ManifestError(where + ex.what());
    }
    m.entries.push_back(std::move(e));
  }
  try {
    m.validate(false);
  } catch (const ManifestError& ex) {
    throw ManifestError(origin + ": " + ex.what());
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path(), path.string());
}

Artifact materialize(const ManifestEntry& entry, const fs::path& base_dir) {
  Artifact a;
  a.source_id = entry.source_id;
  a.split = entry.split;
  if (is_procedural(entry.source)) {
    const ProceduralSpec spec = parse_procedural(entry.source);
    ShapeVolumes v = generate_procedural_shape(spec.kind, spec.seed);
    a.occupancy = std::move(v.occupancy);
    a.color = std::move(v.color);
  } else {
    fs::path p = entry.source;
    if (p.is_relative()) p = base_dir / p;
    VoxelizeResult v = voxinpaint::voxelize(normalize_mesh(load_obj(p)));
    a.occupancy = std::move(v.occupancy);
    a.color = std::move(v.color);
  }
  return a;
}

// ---------------------------------------------------------------------------
// Reports

std::string format_float(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
  out << "source_id,split,method,geom_defined,fscore,precision,recall,chamfer_mm,occupied_pred,occupied_gt,"
         "color_defined,masked_mse,psnr_db,overlap_count,mask_iou\n";
  for (const EvalRow& r : rows) {
    out << r.source_id << ',' << to_string(r.split) << ',' << r.method << ',' << (r.geom.defined ? 1 : 0) << ','
        << format_float(r.geom.fscore) << ',' << format_float(r.geom.precision) << ','
        << format_float(r.geom.recall) << ',' << format_float(r.geom.chamfer_mm) << ',' << r.geom.occupied_pred
        << ',' << r.geom.occupied_gt << ',' << (r.color.defined ? 1 : 0) << ',' << format_float(r.color.masked_mse)
        << ',' << format_float(r.color.psnr_db) << ',' << r.color.overlap_count << ',' << format_float(r.mask_iou)
        << '\n';
  }
}

std::vector<EvalRow> read_eval_csv(std::istream& in) {
  std::vector<EvalRow> rows;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics csv: missing header");
  const auto num = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 15) throw std::runtime_error("metrics csv: expected 15 columns in '" + line + "'");
    EvalRow r;
    r.source_id = f[0];
    r.split = parse_split(f[1]);
    r.method = f[2];
    r.geom.defined = f[3] == "1";
    r.geom.fscore = num(f[4]);
    r.geom.precision = num(f[5]);
    r.geom.recall = num(f[6]);
    r.geom.chamfer_mm = num(f[7]);
    r.geom.occupied_pred = std::stoull(f[8]);
    r.geom.occupied_gt = std::stoull(f[9]);
    r.color.defined = f[10] == "1";
    r.color.masked_mse = num(f[11]);
    r.color.psnr_db = num(f[12]);
    r.color.overlap_count = std::stoull(f[13]);
    r.mask_iou = num(f[14]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<EvalRow>& rows) {
  struct Acc {
    SummaryRow row;
    int chamfer_n = 0, iou_n = 0;
  };
  std::vector<Acc> acc;
  for (const EvalRow& r : rows) {
    auto it = std::find_if(acc.begin(), acc.end(),
                           [&](const Acc& a) { return a.row.split == r.split && a.row.method == r.method; });
    if (it == acc.end()) {
      acc.push_back({});
      it = acc.end() - 1;
      it->row.split = r.split;
      it->row.method = r.method;
    }
    SummaryRow& s = it->row;
    ++s.objects;
    if (r.geom.defined) {
      ++s.geom_defined;
      s.fscore += r.geom.fscore;
      if (std::isfinite(r.geom.chamfer_mm)) {
        s.chamfer_mm += r.geom.chamfer_mm;
        ++it->chamfer_n;
      }
    }
    if (r.color.defined) {
      ++s.color_defined;
      s.psnr_db += r.color.psnr_db;
      s.masked_mse += r.color.masked_mse;
    }
    if (std::isfinite(r.mask_iou)) {
      s.mask_iou += r.mask_iou;
      ++it->iou_n;
    }
  }
  std::vector<SummaryRow> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Acc& a : acc) {
    SummaryRow s = a.row;
    s.fscore = s.geom_defined ? s.fscore / s.geom_defined : nan;
    s.chamfer_mm = a.chamfer_n ? s.chamfer_mm / a.chamfer_n : nan;
    s.psnr_db = s.color_defined ? s.psnr_db / s.color_defined : nan;
    s.masked_mse = s.color_defined ? s.masked_mse / s.color_defined : nan;
    s.mask_iou = a.iou_n ? s.mask_iou / a.iou_n : nan;
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "split,method,objects,geom_defined,fscore,chamfer_mm,color_defined,masked_mse,psnr_db,mask_iou\n";
  for (const SummaryRow& s : rows)
    out << to_string(s.split) << ',' << s.method << ',' << s.objects << ',' << s.geom_defined << ','
        << format_float(s.fscore) << ',' << format_float(s.chamfer_mm) << ',' << s.color_defined << ','
        << format_float(s.masked_mse) << ',' << format_float(s.psnr_db) << ',' << format_float(s.mask_iou) << '\n';
}

std::uint64_t hash_file(const fs::path& path) { return fnv1a(read_text(path)); }

// ---------------------------------------------------------------------------
// Stages

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kVoxelize: return "voxelize";
    case Stage::kSynthDamage: return "synth-damage";
    case Stage::kTrainMask: return "train-mask";
    case Stage::kPredictMask: return "predict-mask";
    case Stage::kTrainInpaint: return "train-inpaint";
    case Stage::kInpaint: return "inpaint";
    case Stage::kBaselineSymmetry: return "baseline-symmetry";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kReport: return "report";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (int i = 0; i < kStageCount; ++i)
    if (to_string(static_cast<Stage>(i)) == s) return static_cast<Stage>(i);
  throw std::invalid_argument("unknown stage '" + std::string(s) + "'");
}

Pipeline::Pipeline(Manifest manifest, RunConfig config, fs::path out_dir, std::ostream* log)
    : manifest_(std::move(manifest)), cfg_(std::move(config)), out_(std::move(out_dir)), log_(log) {
  cfg_.validate();
  manifest_.validate(true);
}

void Pipeline::note(const std::string& msg) const {
  if (log_) *log_ << msg << '\n' << std::flush;
}

fs::path Pipeline::stamp_path(Stage s) const { return out_ / "stamps" / (to_string(s) + ".stamp"); }

std::vector<const ManifestEntry*> Pipeline::eval_entries() const {
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : manifest_.entries)
    if (e.split != Split::kTrain) out.push_back(&e);
  return out;
}

std::string Pipeline::fingerprint(Stage stage) const {
  std::uint64_t h = fnv1a(to_string(stage));
  h = fnv1a(relevant_config(stage, cfg_), h);
  h = fnv1a(manifest_.canonical(), h);
  for (Stage dep : dependencies(stage, cfg_.mask_source)) {
    const fs::path p = stamp_path(dep);
    h = fnv1a(fs::exists(p) ? read_text(p) : std::string("missing"), h);
  }
  return hex(h);
}

bool Pipeline::up_to_date(Stage stage) const {
  const fs::path p = stamp_path(stage);
  if (!fs::exists(p)) return false;
  std::ifstream in(p);
  std::string word, value;
  if (!(in >> word >> value) || word != "fingerprint" || value != fingerprint(stage)) return false;
  std::string hash, rel;
  while (in >> hash >> rel) {
    const fs::path f = out_ / rel;
    if (!fs::exists(f) || hex(hash_file(f)) != hash) return false;
  }
  return true;
}

void Pipeline::require_stage(Stage needed, Stage by) const {
  if (!fs::exists(stamp_path(needed)))
    throw StageError(by, "missing upstream artifacts from stage '" + to_string(needed) + "' under " + out_.string() +
                             " (run it first)");
}

bool Pipeline::run(Stage stage, bool force) {
  for (Stage dep : dependencies(stage, cfg_.mask_source)) require_stage(dep, stage);
  if (!force && up_to_date(stage)) {
    note("[" + to_string(stage) + "] up to date, skipping");
    return false;
  }
  note("[" + to_string(stage) + "] running");
  fs::remove(stamp_path(stage));
  std::vector<fs::path> outputs;
  try {
    outputs = execute(stage);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
  const std::string fp = fingerprint(stage);
  ensure_parent(stamp_path(stage));
  std::ofstream st(stamp_path(stage));
  st << "fingerprint " << fp << '\n';
  for (const fs::path& f : outputs) st << hex(hash_file(f)) << ' ' << fs::relative(f, out_).generic_string() << '\n';
  if (!st) throw StageError(stage, "cannot write stamp " + stamp_path(stage).string());
  return true;
}

void Pipeline::run_all(bool force) {
  for (int i = 0; i < kStageCount; ++i) run(static_cast<Stage>(i), force);
}

std::vector<fs::path> Pipeline::execute(Stage stage) {
  switch (stage) {
    case Stage::kVoxelize: return voxelize();
    case Stage::kSynthDamage: return synth_damage();
    case Stage::kTrainMask: return train_mask();
    case Stage::kPredictMask: return predict_mask();
    case Stage::kTrainInpaint: return train_inpaint();
    case Stage::kInpaint: return inpaint();
    case Stage::kBaselineSymmetry: return baseline_symmetry();
    case Stage::kEvaluate: return evaluate();
    case Stage::kReport: return report();
  }
  return {};
}

namespace {

fs::path vox_occ(const fs::path& out, const std::string& id) { return out / "voxels" / (id + ".occ.vvol"); }
fs::path vox_rgb(const fs::path& out, const std::string& id) { return out / "voxels" / (id + ".rgb.vvol"); }
fs::path dmg(const fs::path& out, const std::string& id, const char* what) {
  return out / "damage" / (id + "." + what + ".vvol");
}
fs::path mask_file(const fs::path& out, const std::string& id, const char* what) {
  return out / "masks" / (id + "." + what + ".vvol");
}
fs::path result_file(const fs::path& out, const char* dir, const std::string& id, const char* what) {
  return out / dir / (id + "." + what + ".vvol");
}

template <class V>
V load_or_fail(const fs::path& p, Stage by, V (*loader)(const fs::path&)) {
  if (!fs::exists(p)) throw StageError(by, "missing upstream artifact " + p.string());
  return loader(p);
}

}  // namespace

std::vector<Artifact> Pipeline::load_corpus(Stage by) const {
  std::vector<Artifact> corpus;
  corpus.reserve(manifest_.entries.size());
  for (const ManifestEntry& e : manifest_.entries) {
    Artifact a;
    a.source_id = e.source_id;
    a.split = e.split;
    a.occupancy = load_or_fail(vox_occ(out_, e.source_id), by, &vvol::load_grid);
    a.color = load_or_fail(vox_rgb(out_, e.source_id), by, &vvol::load_color);
    corpus.push_back(std::move(a));
  }
  return corpus;
}

Sample Pipeline::load_eval_sample(const ManifestEntry& e, Stage by) const {
  Sample s;
  s.source_id = e.source_id;
  s.v_gt = load_or_fail(vox_occ(out_, e.source_id), by, &vvol::load_grid);
  s.c_gt = load_or_fail(vox_rgb(out_, e.source_id), by, &vvol::load_color);
  s.v_dam = load_or_fail(dmg(out_, e.source_id, "vdam"), by, &vvol::load_grid);
  s.c_dam = load_or_fail(dmg(out_, e.source_id, "cdam"), by, &vvol::load_color);
  s.mask = load_or_fail(dmg(out_, e.source_id, "mask"), by, &vvol::load_mask);
  return s;
}

DamageMask Pipeline::conditioning_mask(const Sample& s, Stage by) const {
  if (cfg_.mask_source == MaskSourceKind::kGroundTruth) return s.mask;
  return load_or_fail(mask_file(out_, s.source_id, "pred"), by, &vvol::load_mask);
}

std::vector<fs::path> Pipeline::voxelize() {
  std::vector<fs::path> outs;
  for (const ManifestEntry& e : manifest_.entries) {
    const Artifact a = materialize(e, manifest_.base_dir);
    if (a.occupancy.empty()) throw std::runtime_error(e.source_id + ": voxelization produced no occupied voxels");
    outs.push_back(vox_occ(out_, e.source_id));
    outs.push_back(vox_rgb(out_, e.source_id));
    ensure_parent(outs.back());
    vvol::save(outs[outs.size() - 2], a.occupancy);
    vvol::save(outs.back(), a.color);
  }
  return outs;
}

std::vector<fs::path> Pipeline::synth_damage() {
  std::vector<fs::path> outs;
  const fs::path table = out_ / "damage" / "realizations.csv";
  ensure_parent(table);
  std::ofstream csv(table);
  csv << "source_id,split,seed,degenerate,mask_voxels,damaged_voxels\n";
  for (const ManifestEntry* e : eval_entries()) {
    Artifact a;
    a.source_id = e->source_id;
    a.split = e->split;
    a.occupancy = load_or_fail(vox_occ(out_, e->source_id), Stage::kSynthDamage, &vvol::load_grid);
    a.color = load_or_fail(vox_rgb(out_, e->source_id), Stage::kSynthDamage, &vvol::load_color);
    const Sample s = realize_damage(a, cfg_.damage, cfg_.seed, "eval", 0);
    vvol::save(dmg(out_, e->source_id, "vdam"), s.v_dam);
    vvol::save(dmg(out_, e->source_id, "cdam"), s.c_dam);
    vvol::save(dmg(out_, e->source_id, "mask"), s.mask);
    for (const char* w : {"vdam", "cdam", "mask"}) outs.push_back(dmg(out_, e->source_id, w));
    csv << e->source_id << ',' << to_string(e->split) << ',' << s.seed << ',' << (s.degenerate ? 1 : 0) << ','
        << s.mask.count() << ',' << s.v_dam.count() << '\n';
  }
  csv.close();
  outs.push_back(table);
  return outs;
}

std::vector<fs::path> Pipeline::train_mask() {
  const std::vector<Artifact> corpus = load_corpus(Stage::kTrainMask);
  const fs::path log_path = out_ / "models" / "stage1_log.csv";
  ensure_parent(log_path);
  std::ofstream csv(log_path);
  csv << "epoch,lr,train_bce,val_bce\n";
  const Stage1Result r = train_stage1(select(corpus, Split::kTrain), select(corpus, Split::kVal), cfg_.stage1,
                                      cfg_.damage, cfg_.seed, [&](const Stage1Epoch& e) {
                                        csv << e.epoch << ',' << format_float(e.lr) << ','
                                            << format_float(e.train_bce) << ',' << format_float(e.val_bce) << '\n';
                                        note("  stage1 epoch " + std::to_string(e.epoch) + " train " +
                                             format_float(e.train_bce) + " val " + format_float(e.val_bce));
                                      });
  csv.close();
  r.best.save(stage1_checkpoint());
  note("  stage1 best epoch " + std::to_string(r.best_epoch));
  return {stage1_checkpoint(), log_path};
}

std::vector<fs::path> Pipeline::predict_mask() {
  if (!fs::exists(stage1_checkpoint()))
    throw StageError(Stage::kPredictMask, "missing upstream artifact " + stage1_checkpoint().string());
  const MaskModel model(nn::Checkpoint::load(stage1_checkpoint()));
  std::vector<fs::path> outs;
  for (const ManifestEntry* e : eval_entries()) {
    const Sample s = load_eval_sample(*e, Stage::kPredictMask);
    const DamageMask ind = indicator_for(s, cfg_.stage1.indicator_dropout, cfg_.seed, "eval-indicator", 0);
    const DamageMask pred = voxinpaint::predict_mask(model, s, ind);
    outs.push_back(mask_file(out_, e->source_id, "indicator"));
    ensure_parent(outs.back());
    vvol::save(outs.back(), ind);
    outs.push_back(mask_file(out_, e->source_id, "pred"));
    vvol::save(outs.back(), pred);
  }
  return outs;
}

std::vector<fs::path> Pipeline::train_inpaint() {
  const std::vector<Artifact> corpus = load_corpus(Stage::kTrainInpaint);
  const PerceptualExtractor ex = make_extractor(cfg_, manifest_.base_dir);
  const fs::path log_path = out_ / "models" / "stage2_log.csv";
  ensure_parent(log_path);
  std::ofstream csv(log_path);
  csv << "epoch,lr,train_total,train_noise,train_bce,train_color,train_perceptual,train_prior,"
         "val_total,val_noise,val_bce,val_color,val_perceptual,val_prior\n";
  const Stage2Result r =
      train_stage2(select(corpus, Split::kTrain), select(corpus, Split::kVal), cfg_.stage2, cfg_.loss, cfg_.damage,
                   ex, cfg_.seed, {}, [&](const Stage2Epoch& e) {
                     csv << e.epoch << ',' << format_float(e.lr);
                     for (double v : e.train) csv << ',' << format_float(v);
                     for (double v : e.val) csv << ',' << format_float(v);
                     csv << '\n';
                     note("  stage2 epoch " + std::to_string(e.epoch) + " train " + format_float(e.train[0]) +
                          " val " + format_float(e.val[0]));
                   });
  csv.close();
  r.best.save(stage2_checkpoint());
  note("  stage2 best epoch " + std::to_string(r.best_epoch));
  return {stage2_checkpoint(), log_path};
}

std::vector<fs::path> Pipeline::inpaint() {
  if (!fs::exists(stage2_checkpoint()))
    throw StageError(Stage::kInpaint, "missing upstream artifact " + stage2_checkpoint().string());
  const InpaintModel model(nn::Checkpoint::load(stage2_checkpoint()));
  std::vector<fs::path> outs;
  for (const ManifestEntry* e : eval_entries()) {
    const Sample s = load_eval_sample(*e, Stage::kInpaint);
    const DamageMask mask = conditioning_mask(s, Stage::kInpaint);
    const InferenceOptions opt{cfg_.inference, derive_seed(cfg_.seed, "inpaint", 0, e->source_id), cfg_.ddpm_steps};
    const InpaintResult r = infer_inpaint(model, s.v_dam, s.c_dam, mask, opt);
    outs.push_back(result_file(out_, "inpaint", e->source_id, "occ"));
    ensure_parent(outs.back());
    vvol::save(outs.back(), r.v_hat);
    outs.push_back(result_file(out_, "inpaint", e->source_id, "rgb"));
    vvol::save(outs.back(), r.c_hat);
  }
  return outs;
}

std::vector<fs::path> Pipeline::baseline_symmetry() {
  std::vector<fs::path> outs;
  const fs::path table = out_ / "baseline" / "axes.csv";
  ensure_parent(table);
  std::ofstream csv(table);
  csv << "source_id,axis,mirror_iou\n";
  for (const ManifestEntry* e : eval_entries()) {
    const Sample s = load_eval_sample(*e, Stage::kBaselineSymmetry);
    const SymmetryFill f = symmetry_baseline(s.v_dam, s.c_dam, conditioning_mask(s, Stage::kBaselineSymmetry));
    outs.push_back(result_file(out_, "baseline", e->source_id, "occ"));
    ensure_parent(outs.back());
    vvol::save(outs.back(), f.result.v_hat);
    outs.push_back(result_file(out_, "baseline", e->source_id, "rgb"));
    vvol::save(outs.back(), f.result.c_hat);
    csv << e->source_id << ',' << (f.axis == MirrorAxis::kX ? "x" : "y") << ',' << format_float(f.iou) << '\n';
  }
  csv.close();
  outs.push_back(table);
  return outs;
}

std::vector<fs::path> Pipeline::evaluate() {
  std::vector<EvalRow> rows;
  for (const ManifestEntry* e : eval_entries()) {
    const Sample s = load_eval_sample(*e, Stage::kEvaluate);
    double iou = std::numeric_limits<double>::quiet_NaN();
    if (cfg_.mask_source == MaskSourceKind::kPredicted) iou = mask_iou(conditioning_mask(s, Stage::kEvaluate), s.mask);
    const auto add = [&](const char* method, const VoxelGrid& v, const ColorVolume& c) {
      EvalRow r;
      r.source_id = e->source_id;
      r.split = e->split;
      r.method = method;
      r.geom = fscore_1mm(v, s.v_gt);
      r.color = masked_color_metrics(v, c, s.v_gt, s.c_gt);
      r.mask_iou = iou;
      rows.push_back(std::move(r));
    };
    add("damaged", s.v_dam, s.c_dam);
    add("symmetry",
        load_or_fail(result_file(out_, "baseline", e->source_id, "occ"), Stage::kEvaluate, &vvol::load_grid),
        load_or_fail(result_file(out_, "baseline", e->source_id, "rgb"), Stage::kEvaluate, &vvol::load_color));
    add("diffusion",
        load_or_fail(result_file(out_, "inpaint", e->source_id, "occ"), Stage::kEvaluate, &vvol::load_grid),
        load_or_fail(result_file(out_, "inpaint", e->source_id, "rgb"), Stage::kEvaluate, &vvol::load_color));
  }
  ensure_parent(report_path());
  std::ofstream out(report_path());
  write_eval_csv(out, rows);
  return {report_path()};
}

std::vector<fs::path> Pipeline::report() {
  std::ifstream in(report_path());
  if (!in) throw StageError(Stage::kReport, "missing upstream artifact " + report_path().string());
  const std::vector<SummaryRow> summary = summarize(read_eval_csv(in));
  std::ofstream out(summary_path());
  write_summary_csv(out, summary);
  out.close();
  for (const SummaryRow& s : summary)
    note("  " + to_string(s.split) + " " + s.method + ": F@1mm " + format_float(s.fscore) + ", Chamfer " +
         format_float(s.chamfer_mm) + " mm, PSNR " + format_float(s.psnr_db) + " dB");
  return {summary_path()};
}

}  // namespace voxinpaint
