// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/nn/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "voxinpaint/byte_io.hpp"

namespace voxinpaint::nn {
namespace {

constexpr const char kMagic[] = "VCKPT1\n";
constexpr std::uint32_t kMaxRank = 8;

}  // namespace

void Checkpoint::put(std::string name, Array<float> value) {
  for (auto& [n, v] : entries)
    if (n == name) {
      v = std::move(value);
      return;
    }
  entries.emplace_back(std::move(name), std::move(value));
}

const Array<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, v] : entries)
    if (n == name) return &v;
  return nullptr;
}

const Array<float>& Checkpoint::get(const std::string& name) const {
  const auto* v = find(name);
  if (!v) throw std::runtime_error("checkpoint '" + model_name + "' has no entry '" + name + "'");
  return *v;
}

double Checkpoint::scalar(const std::string& name) const {
  const auto& v = get(name);
  if (v.size() != 1) throw std::runtime_error("checkpoint entry '" + name + "' is not a scalar");
  return v.data[0];
}

void Checkpoint::write(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic) - 1);
  byte_io::put_string(out, model_name);
  byte_io::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, arr] : entries) {
    byte_io::put_string(out, name);
    byte_io::put_u32(out, static_cast<std::uint32_t>(arr.rank()));
    for (int d : arr.shape) byte_io::put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : arr.data) byte_io::put_f32(out, f);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint Checkpoint::read(std::istream& in) {
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::string(magic, sizeof(magic)) != kMagic)
    throw std::runtime_error("checkpoint: bad magic, expected VCKPT1");
  Checkpoint ck;
  ck.model_name = byte_io::get_string(in);
  const std::uint32_t count = byte_io::get_u32(in);
  for (std::uint32_t e = 0; e < count; ++e) {
    std::string name = byte_io::get_string(in);
    const std::uint32_t rank = byte_io::get_u32(in);
    if (rank > kMaxRank) throw std::runtime_error("checkpoint: entry '" + name + "' has rank > 8");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(byte_io::get_u32(in));
    Array<float> arr(shape);
    for (float& f : arr.data) f = byte_io::get_f32(in);
    ck.entries.emplace_back(std::move(name), std::move(arr));
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  // Write-then-rename so a crash never leaves a truncated checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp.string());
    write(out);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read(in);
}

template <class T>
void store_parameters(Checkpoint& ck, const ParameterStore<T>& params) {
  for (const auto& [name, var] : params.entries()) ck.put(name, var.value().template cast<float>());
}

template <class T>
void load_parameters(const Checkpoint& ck, ParameterStore<T>& params) {
  for (auto& [name, var] : params.entries()) {
    const auto& src = ck.get(name);
    if (src.shape != var.shape())
      throw std::runtime_error("checkpoint: entry '" + name + "' has shape " + shape_str(src.shape) +
                               ", model expects " + shape_str(var.shape()));
    var.mutable_value() = src.template cast<T>();
  }
}

template <class T>
void store_optimizer(Checkpoint& ck, const Adam<T>& adam) {
  ck.put("opt/lr", Array<float>({1}, {static_cast<float>(adam.lr())}));
  ck.put("opt/step", Array<float>({1}, {static_cast<float>(adam.step_count())}));
  for (const auto& [name, mo] : adam.state()) {
    ck.put("opt/" + name + "/m", mo.m.template cast<float>());
    ck.put("opt/" + name + "/v", mo.v.template cast<float>());
  }
}

template <class T>
void load_optimizer(const Checkpoint& ck, Adam<T>& adam) {
  adam.set_lr(ck.scalar("opt/lr"));
  adam.set_step_count(static_cast<long>(ck.scalar("opt/step")));
  adam.state().clear();
  for (const auto& [name, arr] : ck.entries) {
    if (name.rfind("opt/", 0) != 0 || name.size() < 6) continue;
    const std::string tail = name.substr(name.size() - 2);
    if (tail != "/m") continue;
    const std::string param = name.substr(4, name.size() - 6);
    typename Adam<T>::Moments mo{arr.template cast<T>(), ck.get("opt/" + param + "/v").template cast<T>()};
    adam.state().emplace(param, std::move(mo));
  }
}

template void store_parameters<float>(Checkpoint&, const ParameterStore<float>&);
template void store_parameters<double>(Checkpoint&, const ParameterStore<double>&);
template void load_parameters<float>(const Checkpoint&, ParameterStore<float>&);
template void load_parameters<double>(const Checkpoint&, ParameterStore<double>&);
template void store_optimizer<float>(Checkpoint&, const Adam<float>&);
template void store_optimizer<double>(Checkpoint&, const Adam<double>&);
template void load_optimizer<float>(const Checkpoint&, Adam<float>&);
template void load_optimizer<double>(const Checkpoint&, Adam<double>&);

}  // namespace voxinpaint::nn
