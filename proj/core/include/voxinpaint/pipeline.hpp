// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxinpaint/config.hpp"
#include "voxinpaint/dataset.hpp"
#include "voxinpaint/metrics.hpp"

namespace voxinpaint {

/// One object of the corpus. `source` is either `procedural:<kind>:<seed>`
/// or a path to an OBJ mesh, relative to the manifest's directory.
struct ManifestEntry {
  std::string source_id;
  Split split = Split::kTrain;
  std::string source;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  /// Unique ids, known splits and well-formed sources; with `training`
  /// every split must be nonempty. Throws ManifestError.
  void validate(bool training) const;
  /// Canonical text, used for fingerprints.
  [[nodiscard]] std::string canonical() const;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Whitespace-separated `source_id split source` lines; `#` starts a comment.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir, const std::string& origin = "<manifest>");
Manifest load_manifest(const std::filesystem::path& path);

/// Intact occupancy and color of an entry at the lattice resolution.
Artifact materialize(const ManifestEntry& entry, const std::filesystem::path& base_dir);

enum class Stage {
  kVoxelize,
  kSynthDamage,
  kTrainMask,
  kPredictMask,
  kTrainInpaint,
  kInpaint,
  kBaselineSymmetry,
  kEvaluate,
  kReport,
};
inline constexpr int kStageCount = 9;
std::string to_string(Stage s);
Stage parse_stage(std::string_view s);

/// Failure attributed to a pipeline stage; what() starts with its name.
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& msg) : std::runtime_error(to_string(stage) + ": " + msg), stage_(stage) {}
  [[nodiscard]] Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

/// Per object and method row of the evaluation report.
struct EvalRow {
  std::string source_id;
  Split split = Split::kVal;
  std::string method;  // damaged, symmetry, diffusion
  GeomReport geom;
  ColorReport color;
  /// Predicted-vs-true mask agreement for the object (NaN with gt masks).
  double mask_iou = std::numeric_limits<double>::quiet_NaN();
};

struct SummaryRow {
  Split split = Split::kVal;
  std::string method;
  int objects = 0;
  double fscore = 0, chamfer_mm = 0, psnr_db = 0, masked_mse = 0, mask_iou = 0;
  int geom_defined = 0, color_defined = 0;
};

/// Fixed column order, floats with 9 significant digits.
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);
/// Inverse of write_eval_csv for the columns summarize() needs.
std::vector<EvalRow> read_eval_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> summarize(const std::vector<EvalRow>& rows);
std::string format_float(double v);

/// Runs stages against an output directory. Each stage persists its outputs
/// (VVOL1 volumes, VCKPT1 checkpoints, CSV) together with a stamp that
/// records a fingerprint of the configuration, the manifest and the
/// upstream stamps plus a hash of every output file. A stage whose stamp
/// matches and whose outputs are intact is skipped.
class Pipeline {
 public:
  Pipeline(Manifest manifest, RunConfig config, std::filesystem::path out_dir, std::ostream* log = nullptr);

  /// Returns true when the stage ran, false when its outputs were reused.
  bool run(Stage stage, bool force = false);
  void run_all(bool force = false);

  [[nodiscard]] const std::filesystem::path& out_dir() const { return out_; }
  [[nodiscard]] std::filesystem::path report_path() const { return out_ / "reports" / "metrics.csv"; }
  [[nodiscard]] std::filesystem::path summary_path() const { return out_ / "reports" / "summary.csv"; }
  [[nodiscard]] std::filesystem::path stage1_checkpoint() const { return out_ / "models" / "stage1.vckpt"; }
  [[nodiscard]] std::filesystem::path stage2_checkpoint() const { return out_ / "models" / "stage2.vckpt"; }

  /// Objects the pipeline evaluates: validation and test splits.
  [[nodiscard]] std::vector<const ManifestEntry*> eval_entries() const;

 private:
  std::vector<std::filesystem::path> execute(Stage stage);
  [[nodiscard]] std::string fingerprint(Stage stage) const;
  [[nodiscard]] bool up_to_date(Stage stage) const;
  void require_stage(Stage needed, Stage by) const;
  [[nodiscard]] std::filesystem::path stamp_path(Stage s) const;
  void note(const std::string& msg) const;

  std::vector<Artifact> load_corpus(Stage by) const;
  Sample load_eval_sample(const ManifestEntry& e, Stage by) const;
  DamageMask conditioning_mask(const Sample& s, Stage by) const;

  std::vector<std::filesystem::path> voxelize();
  std::vector<std::filesystem::path> synth_damage();
  std::vector<std::filesystem::path> train_mask();
  std::vector<std::filesystem::path> predict_mask();
  std::vector<std::filesystem::path> train_inpaint();
  std::vector<std::filesystem::path> inpaint();
  std::vector<std::filesystem::path> baseline_symmetry();
  std::vector<std::filesystem::path> evaluate();
  std::vector<std::filesystem::path> report();

  Manifest manifest_;
  RunConfig cfg_;
  std::filesystem::path out_;
  std::ostream* log_;
};

/// 64-bit FNV-1a of a file's bytes.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace voxinpaint
