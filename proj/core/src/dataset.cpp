// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/dataset.hpp"

#include <stdexcept>

#include "voxinpaint/random.hpp"

namespace voxinpaint {

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + std::string(s) + "' (expected train, val or test)");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Sample realize_damage(const Artifact& a, const DamageConfig& base, std::uint64_t root_seed,
                      std::string_view tag, std::int64_t epoch) {
  DamageConfig cfg = base;
  cfg.seed = derive_seed(root_seed, tag, epoch, a.source_id);
  return synth_damage(a.occupancy, a.color, cfg, a.source_id);
}

std::vector<const Artifact*> select(const std::vector<Artifact>& corpus, Split split) {
  std::vector<const Artifact*> out;
  for (const auto& a : corpus)
    if (a.split == split) out.push_back(&a);
  return out;
}

}  // namespace voxinpaint
