// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/nn/unet.hpp"

#include <stdexcept>
#include <string>

namespace voxinpaint::nn {

void UNetConfig::validate() const {
  if (spatial != 2 && spatial != 3) throw std::invalid_argument("unet: spatial must be 2 or 3");
  if (in_channels < 1) throw std::invalid_argument("unet: in_channels must be positive");
  if (widths.empty()) throw std::invalid_argument("unet: at least one level required");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("unet: widths must be positive");
  if (time_dim < 0 || time_dim % 2) throw std::invalid_argument("unet: time_dim must be even and >= 0");
  if (heads.empty()) throw std::invalid_argument("unet: at least one head required");
  for (int h : heads)
    if (h < 1) throw std::invalid_argument("unet: head widths must be positive");
}

namespace {

Array<float> ints(const std::vector<int>& v) {
  Array<float> a({static_cast<int>(v.size())});
  for (std::size_t i = 0; i < v.size(); ++i) a.data[i] = static_cast<float>(v[i]);
  return a;
}

std::vector<int> to_ints(const Array<float>& a) {
  std::vector<int> v;
  for (float f : a.data) v.push_back(static_cast<int>(f));
  return v;
}

}  // namespace

void UNetConfig::store(Checkpoint& ck) const {
  ck.put("config/spatial", ints({spatial}));
  ck.put("config/in_channels", ints({in_channels}));
  ck.put("config/widths", ints(widths));
  ck.put("config/residual", ints({residual ? 1 : 0}));
  ck.put("config/time_dim", ints({time_dim}));
  ck.put("config/heads", ints(heads));
  ck.put("config/input_skip", ints({input_skip ? 1 : 0}));
}

UNetConfig UNetConfig::load(const Checkpoint& ck) {
  UNetConfig c;
  c.spatial = static_cast<int>(ck.scalar("config/spatial"));
  c.in_channels = static_cast<int>(ck.scalar("config/in_channels"));
  c.widths = to_ints(ck.get("config/widths"));
  c.residual = ck.scalar("config/residual") != 0.0;
  c.time_dim = static_cast<int>(ck.scalar("config/time_dim"));
  c.heads = to_ints(ck.get("config/heads"));
  if (const Array<float>* a = ck.find("config/input_skip")) c.input_skip = !a->data.empty() && a->data[0] != 0.0F;
  c.validate();
  return c;
}

template <class T>
typename UNet<T>::Block UNet<T>::make_block(const std::string& name, int in, int out, Rng& rng) {
  Block b;
  b.a = Conv<T>::make(params_, name + ".a", cfg_.spatial, in, out, 3, rng);
  b.b = Conv<T>::make(params_, name + ".b", cfg_.spatial, out, out, 3, rng);
  if (cfg_.residual && in != out) {
    b.skip = Conv<T>::make(params_, name + ".skip", cfg_.spatial, in, out, 1, rng);
    b.has_skip = true;
  }
  return b;
}

template <class T>
UNet<T>::UNet(const UNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const int levels = static_cast<int>(cfg_.widths.size());
  int in = cfg_.in_channels;
  for (int i = 0; i < levels; ++i) {
    enc_.push_back(make_block("enc" + std::to_string(i), in, cfg_.widths[i], rng));
    in = cfg_.widths[i];
  }
  if (cfg_.time_dim > 0) {
    const int wb = cfg_.widths.back();
    time1_ = Linear<T>::make(params_, "time.fc1", cfg_.time_dim, wb, rng);
    time2_ = Linear<T>::make(params_, "time.fc2", wb, wb, rng);
  }
  for (int i = levels - 2; i >= 0; --i) {
    up_.push_back(TransposeConv<T>::make(params_, "up" + std::to_string(i), cfg_.spatial, cfg_.widths[i + 1],
                                         cfg_.widths[i], rng));
    dec_.push_back(make_block("dec" + std::to_string(i), 2 * cfg_.widths[i], cfg_.widths[i], rng));
  }
  for (std::size_t k = 0; k < cfg_.heads.size(); ++k)
    heads_.push_back(Conv<T>::make(params_, "head" + std::to_string(k), cfg_.spatial,
                                   cfg_.widths[0] + (cfg_.input_skip ? cfg_.in_channels : 0), cfg_.heads[k], 1, rng));
}

template <class T>
Var<T> UNet<T>::run_block(const Block& blk, const Var<T>& x) const {
  Var<T> h = blk.b(relu(blk.a(x)));
  if (cfg_.residual) h = add(h, blk.has_skip ? blk.skip(x) : x);
  return relu(h);
}

template <class T>
std::vector<Var<T>> UNet<T>::forward(const Var<T>& x, const std::vector<int>& timesteps) const {
  const Shape& s = x.shape();
  if (static_cast<int>(s.size()) != cfg_.spatial + 2 || s[1] != cfg_.in_channels)
    throw ShapeError("unet: input " + shape_str(s) + " does not match " + std::to_string(cfg_.in_channels) +
                     " channels over " + std::to_string(cfg_.spatial) + " spatial axes");
  for (int a = 2; a < cfg_.spatial + 2; ++a)
    if (s[a] % cfg_.divisor() != 0)
      throw ShapeError("unet: spatial dims of " + shape_str(s) + " must be divisible by " +
                       std::to_string(cfg_.divisor()));
  if (cfg_.time_dim > 0 && static_cast<int>(timesteps.size()) != s[0])
    throw std::invalid_argument("unet: expected one timestep per batch item");

  const int levels = static_cast<int>(cfg_.widths.size());
  std::vector<Var<T>> skips;
  Var<T> h = x;
  for (int i = 0; i < levels; ++i) {
    h = run_block(enc_[i], h);
    if (i + 1 < levels) {
      skips.push_back(h);
      h = max_pool(h, cfg_.spatial);
    }
  }
  if (cfg_.time_dim > 0) {
    auto emb = constant(sinusoidal_embedding<T>(timesteps, cfg_.time_dim));
    h = add_channel_vector(h, time2_(relu(time1_(emb))));
  }
  for (int j = 0; j + 1 < levels; ++j) {
    h = up_[j](h);
    h = run_block(dec_[j], concat_channels(h, skips[levels - 2 - j]));
  }
  if (cfg_.input_skip) h = concat_channels(h, x);
  std::vector<Var<T>> out;
  for (const auto& head : heads_) out.push_back(head(h));
  return out;
}

template class UNet<float>;
template class UNet<double>;

}  // namespace voxinpaint::nn
