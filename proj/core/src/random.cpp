// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/random.hpp"

namespace voxinpaint {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  // Length is folded in so ("ab","c") and ("a","bc") differ.
  return h ^ (static_cast<std::uint64_t>(s.size()) * 0x9E3779B97F4A7C15ULL);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stage_tag, std::int64_t epoch,
                          std::string_view item_id) {
  std::uint64_t h = splitmix64(root_seed);
  h = splitmix64(h ^ fnv1a(stage_tag));
  h = splitmix64(h ^ static_cast<std::uint64_t>(epoch));
  h = splitmix64(h ^ fnv1a(item_id));
  return h;
}

}  // namespace voxinpaint
