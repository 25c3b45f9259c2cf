// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/volume.hpp"

namespace voxinpaint {

std::string to_string(const Dims& d) {
  return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
}

void check_sample_invariants(const Sample& s) {
  const Dims d = s.v_gt.dims();
  if (s.v_dam.dims() != d || s.mask.dims() != d || s.c_gt.dims() != d || s.c_dam.dims() != d)
    throw std::invalid_argument("sample " + s.source_id + ": volume dims disagree");
  if (!is_subset(s.v_dam, s.v_gt))
    throw std::invalid_argument("sample " + s.source_id + ": damaged grid adds matter");
  for (std::size_t i = 0; i < s.v_gt.size(); ++i) {
    if (s.mask[i] != (s.v_gt[i] && !s.v_dam[i]))
      throw std::invalid_argument("sample " + s.source_id + ": mask does not match v_gt and v_dam");
    for (int ch = 0; ch < ColorVolume::kChannels; ++ch) {
      const float expected = s.v_dam[i] ? s.c_gt.at(ch, i) : 0.0F;
      if (s.c_dam.at(ch, i) != expected)
        throw std::invalid_argument("sample " + s.source_id + ": c_dam is not c_gt restricted to v_dam");
    }
  }
}

}  // namespace voxinpaint
