// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace voxinpaint {

MaskSourceKind parse_mask_source(std::string_view s) {
  if (s == "predicted") return MaskSourceKind::kPredicted;
  if (s == "gt") return MaskSourceKind::kGroundTruth;
  throw std::invalid_argument("unknown mask source '" + std::string(s) + "' (expected predicted or gt)");
}

std::string to_string(MaskSourceKind k) { return k == MaskSourceKind::kPredicted ? "predicted" : "gt"; }

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

template <class T>
T parse_number(std::string_view s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto p = s.find(',');
    out.push_back(trim(s.substr(0, p)));
    if (p == std::string_view::npos) break;
    s.remove_prefix(p + 1);
  }
  return out;
}

struct Key {
  const char* section;
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

Key dbl(const char* sec, const char* name, std::function<double&(RunConfig&)> ref) {
  return {sec, name, [ref](const RunConfig& c) {
            RunConfig t = c;
            return fmt(ref(t));
          },
          [ref](RunConfig& c, std::string_view v) { ref(c) = parse_number<double>(v); }};
}

Key integer(const char* sec, const char* name, std::function<int&(RunConfig&)> ref) {
  return {sec, name, [ref](const RunConfig& c) {
            RunConfig t = c;
            return std::to_string(ref(t));
          },
          [ref](RunConfig& c, std::string_view v) { ref(c) = parse_number<int>(v); }};
}

Key boolean(const char* sec, const char* name, std::function<bool&(RunConfig&)> ref) {
  return {sec, name, [ref](const RunConfig& c) {
            RunConfig t = c;
            return std::string(ref(t) ? "true" : "false");
          },
          [ref](RunConfig& c, std::string_view v) { ref(c) = parse_bool(v); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(integer("run", "resolution", [](RunConfig& c) -> int& { return c.resolution; }));
    k.push_back({"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, std::string_view v) { c.seed = parse_number<std::uint64_t>(v); }});
    k.push_back({"run", "mask_source", [](const RunConfig& c) { return to_string(c.mask_source); },
                 [](RunConfig& c, std::string_view v) { c.mask_source = parse_mask_source(v); }});
    k.push_back({"run", "inference_mode", [](const RunConfig& c) { return to_string(c.inference); },
                 [](RunConfig& c, std::string_view v) { c.inference = parse_inference_mode(v); }});
    k.push_back(integer("run", "ddpm_steps", [](RunConfig& c) -> int& { return c.ddpm_steps; }));
    k.push_back({"run", "perceptual_weights", [](const RunConfig& c) { return c.perceptual_weights; },
                 [](RunConfig& c, std::string_view v) { c.perceptual_weights = std::string(v); }});

    k.push_back(integer("stage1", "levels", [](RunConfig& c) -> int& { return c.stage1.levels; }));
    k.push_back(integer("stage1", "base_channels", [](RunConfig& c) -> int& { return c.stage1.base_channels; }));
    k.push_back(integer("stage1", "epochs", [](RunConfig& c) -> int& { return c.stage1.epochs; }));
    k.push_back(dbl("stage1", "lr", [](RunConfig& c) -> double& { return c.stage1.lr; }));
    k.push_back(integer("stage1", "batch", [](RunConfig& c) -> int& { return c.stage1.batch; }));
    k.push_back(dbl("stage1", "threshold", [](RunConfig& c) -> double& { return c.stage1.threshold; }));
    k.push_back(dbl("stage1", "indicator_dropout", [](RunConfig& c) -> double& { return c.stage1.indicator_dropout; }));
    k.push_back(boolean("stage1", "augment", [](RunConfig& c) -> bool& { return c.stage1.augment; }));
    k.push_back(dbl("stage1", "max_rotation_deg", [](RunConfig& c) -> double& { return c.stage1.max_rotation_deg; }));
    k.push_back(dbl("stage1", "plateau_factor", [](RunConfig& c) -> double& { return c.stage1.plateau.factor; }));
    k.push_back(integer("stage1", "plateau_patience", [](RunConfig& c) -> int& { return c.stage1.plateau.patience; }));

    k.push_back({"stage2", "widths",
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.stage2.widths.size(); ++i)
                     s += (i ? ", " : "") + std::to_string(c.stage2.widths[i]);
                   return s;
                 },
                 [](RunConfig& c, std::string_view v) {
                   c.stage2.widths.clear();
                   for (auto item : split_list(v)) c.stage2.widths.push_back(parse_number<int>(item));
                 }});
    k.push_back(integer("stage2", "time_dim", [](RunConfig& c) -> int& { return c.stage2.time_dim; }));
    k.push_back(integer("stage2", "epochs", [](RunConfig& c) -> int& { return c.stage2.epochs; }));
    k.push_back(dbl("stage2", "lr", [](RunConfig& c) -> double& { return c.stage2.lr; }));
    k.push_back(integer("stage2", "batch", [](RunConfig& c) -> int& { return c.stage2.batch; }));
    k.push_back(dbl("stage2", "mirror_probability", [](RunConfig& c) -> double& { return c.stage2.mirror_probability; }));
    k.push_back(integer("stage2", "timesteps", [](RunConfig& c) -> int& { return c.stage2.timesteps; }));
    k.push_back(dbl("stage2", "beta_start", [](RunConfig& c) -> double& { return c.stage2.beta_start; }));
    k.push_back(dbl("stage2", "beta_end", [](RunConfig& c) -> double& { return c.stage2.beta_end; }));
    k.push_back({"stage2", "palette",
                 [](const RunConfig& c) {
                   return fmt(c.stage2.palette[0]) + ", " + fmt(c.stage2.palette[1]) + ", " + fmt(c.stage2.palette[2]);
                 },
                 [](RunConfig& c, std::string_view v) {
                   const auto items = split_list(v);
                   if (items.size() != 3) throw std::invalid_argument("palette needs three values");
                   for (int i = 0; i < 3; ++i) c.stage2.palette[i] = parse_number<double>(items[i]);
                 }});
    k.push_back(dbl("stage2", "plateau_factor", [](RunConfig& c) -> double& { return c.stage2.plateau.factor; }));
    k.push_back(integer("stage2", "plateau_patience", [](RunConfig& c) -> int& { return c.stage2.plateau.patience; }));

    k.push_back(dbl("loss", "noise", [](RunConfig& c) -> double& { return c.loss.noise; }));
    k.push_back(dbl("loss", "bce", [](RunConfig& c) -> double& { return c.loss.bce; }));
    k.push_back(dbl("loss", "color", [](RunConfig& c) -> double& { return c.loss.color; }));
    k.push_back(dbl("loss", "perceptual", [](RunConfig& c) -> double& { return c.loss.perceptual; }));
    k.push_back(dbl("loss", "prior", [](RunConfig& c) -> double& { return c.loss.prior; }));

    k.push_back(integer("damage", "holes_per_slice_min", [](RunConfig& c) -> int& { return c.damage.holes_per_slice_min; }));
    k.push_back(integer("damage", "holes_per_slice_max", [](RunConfig& c) -> int& { return c.damage.holes_per_slice_max; }));
    k.push_back(dbl("damage", "hole_radius_min", [](RunConfig& c) -> double& { return c.damage.hole_radius_min; }));
    k.push_back(dbl("damage", "hole_radius_max", [](RunConfig& c) -> double& { return c.damage.hole_radius_max; }));
    k.push_back(boolean("damage", "allow_circle", [](RunConfig& c) -> bool& { return c.damage.allow_circle; }));
    k.push_back(boolean("damage", "allow_polygon", [](RunConfig& c) -> bool& { return c.damage.allow_polygon; }));
    k.push_back(integer("damage", "erosion_radius", [](RunConfig& c) -> int& { return c.damage.erosion_radius; }));
    k.push_back(integer("damage", "max_attempts", [](RunConfig& c) -> int& { return c.damage.max_attempts; }));
    return k;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  try {
    if (resolution != kResolution)
      throw std::invalid_argument("run.resolution: only " + std::to_string(kResolution) + " is supported");
    if (ddpm_steps < 0 || ddpm_steps == 1) throw std::invalid_argument("run.ddpm_steps must be 0 or >= 2");
    stage1.validate();
    stage2.validate();
    loss.validate();
    damage.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_config(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::string section, line;
  std::set<std::string> seen;
  int lineno = 0;
  const auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("malformed section header");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      bool known = false;
      for (const Key& k : keys()) known = known || section == k.section;
      if (!known) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of any [section]");
    const std::string name(trim(s.substr(0, eq)));
    const std::string_view value = trim(s.substr(eq + 1));
    const Key* key = nullptr;
    for (const Key& k : keys())
      if (section == k.section && name == k.name) key = &k;
    if (key == nullptr) fail("unknown key '" + name + "' in [" + section + "]");
    if (!seen.insert(section + "." + name).second) fail("duplicate key '" + name + "' in [" + section + "]");
    try {
      key->set(cfg, value);
    } catch (const std::exception& e) {
      fail(section + "." + name + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const Key& k : keys()) {
    if (section != k.section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    const std::string v = k.get(cfg);
    out << k.name << (v.empty() ? " =" : " = ") << v << '\n';
  }
  return out.str();
}

}  // namespace voxinpaint
