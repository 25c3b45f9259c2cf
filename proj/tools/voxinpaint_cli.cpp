// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "voxinpaint/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::string manifest = "data/desk_corpus.manifest";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mask_source;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Run configuration (key = value with [sections]); built-in defaults if omitted");
  sub->add_option("--manifest", c.manifest, "Corpus manifest")->capture_default_str();
  sub->add_option("--seed", c.seed, "Root seed; overrides [run] seed");
  sub->add_option("--out", c.out, "Output root; defaults to $VOXINPAINT_OUT, then ./voxinpaint_out");
  sub->add_option("--mask-source", c.mask_source, "Mask used at inference: predicted or gt")
      ->check(CLI::IsMember({"predicted", "gt"}));
  sub->add_flag("--force", c.force, "Rerun even when outputs are up to date");
  sub->add_flag("-q,--quiet", c.quiet, "Suppress progress output");
}

voxinpaint::RunConfig effective_config(const Common& c) {
  voxinpaint::RunConfig cfg = c.config.empty() ? voxinpaint::RunConfig{} : voxinpaint::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.mask_source.empty()) cfg.mask_source = voxinpaint::parse_mask_source(c.mask_source);
  cfg.validate();
  return cfg;
}

std::string output_root(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("VOXINPAINT_OUT"); env != nullptr && *env != '\0') return env;
  return "voxinpaint_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage voxel inpainting: damage-mask segmentation and masked diffusion completion"};
  app.require_subcommand(1);
  Common common;

  std::vector<std::pair<CLI::App*, voxinpaint::Stage>> stage_cmds;
  const std::pair<const char*, const char*> descriptions[] = {
      {"voxelize", "Materialize every manifest entry as occupancy and color volumes"},
      {"synth-damage", "Draw the evaluation damage realization of each validation and test object"},
      {"train-mask", "Train the stage-1 slice segmentation network"},
      {"predict-mask", "Predict 3D damage masks for the evaluation objects"},
      {"train-inpaint", "Train the stage-2 diffusion inpainting network"},
      {"inpaint", "Complete the evaluation objects with the trained inpainting network"},
      {"baseline-symmetry", "Complete the evaluation objects with the mirror-symmetry baseline"},
      {"evaluate", "Compute geometry and color metrics per object and method"},
      {"report", "Aggregate the metrics into the summary report"},
  };
  for (int i = 0; i < voxinpaint::kStageCount; ++i) {
    CLI::App* sub = app.add_subcommand(descriptions[i].first, descriptions[i].second);
    add_common(sub, common);
    stage_cmds.emplace_back(sub, static_cast<voxinpaint::Stage>(i));
  }
  CLI::App* run_all = app.add_subcommand("run-all", "Run every stage in order, reusing up-to-date outputs");
  add_common(run_all, common);
  CLI::App* show = app.add_subcommand("print-config", "Print the effective configuration");
  add_common(show, common);

  CLI11_PARSE(app, argc, argv);

  try {
    const voxinpaint::RunConfig cfg = effective_config(common);
    if (show->parsed()) {
      std::cout << voxinpaint::dump_config(cfg);
      return 0;
    }
    voxinpaint::Pipeline pipeline(voxinpaint::load_manifest(common.manifest), cfg, output_root(common),
                                  common.quiet ? nullptr : &std::cerr);
    if (run_all->parsed()) {
      pipeline.run_all(common.force);
    } else {
      for (const auto& [sub, stage] : stage_cmds)
        if (sub->parsed()) pipeline.run(stage, common.force);
    }
  } catch (const voxinpaint::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const voxinpaint::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 3;
  } catch (const voxinpaint::ManifestError& e) {
    std::cerr << "error: manifest: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
