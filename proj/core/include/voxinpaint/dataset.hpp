// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "voxinpaint/damage.hpp"
#include "voxinpaint/volume.hpp"

namespace voxinpaint {

enum class Split { kTrain, kVal, kTest };

Split parse_split(std::string_view s);
std::string to_string(Split s);

/// One intact object of the corpus.
struct Artifact {
  std::string source_id;
  VoxelGrid occupancy;
  ColorVolume color;
  Split split = Split::kTrain;
};

/// Damage realization of `a` for one (tag, epoch): the damage seed is
/// derive_seed(root_seed, tag, epoch, source_id).
Sample realize_damage(const Artifact& a, const DamageConfig& base, std::uint64_t root_seed,
                      std::string_view tag, std::int64_t epoch);

std::vector<const Artifact*> select(const std::vector<Artifact>& corpus, Split split);

}  // namespace voxinpaint
