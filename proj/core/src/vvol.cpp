// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#include "voxinpaint/vvol.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "voxinpaint/byte_io.hpp"

namespace voxinpaint::vvol {
namespace {

constexpr const char* kMagic = "VVOL1";

void write_header(std::ostream& out, const Header& h) {
  out << kMagic << '\n'
      << "dims " << h.dims.nx << ' ' << h.dims.ny << ' ' << h.dims.nz << '\n'
      << "channels " << h.channels << '\n'
      << "dtype " << (h.dtype == Header::DType::kU8 ? "u8" : "f32") << '\n'
      << "encoding raw-le\n\n";
}

template <class Tag>
void write_binary(std::ostream& out, const BinaryVolume<Tag>& v) {
  write_header(out, Header{v.dims(), 1, Header::DType::kU8});
  const auto bytes = v.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("vvol: write failed");
}

template <class Tag>
BinaryVolume<Tag> read_binary(std::istream& in) {
  const Header h = read_header(in);
  if (h.channels != 1 || h.dtype != Header::DType::kU8)
    throw std::runtime_error("vvol: expected a 1-channel u8 volume");
  BinaryVolume<Tag> v(h.dims);
  std::vector<char> raw(h.dims.count());
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw std::runtime_error("vvol: truncated payload");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto b = static_cast<unsigned char>(raw[i]);
    if (b > 1) throw std::runtime_error("vvol: occupancy byte outside {0,1}");
    v.set(i, b == 1);
  }
  return v;
}

template <class T>
void save_to(const std::filesystem::path& path, const T& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("vvol: cannot open " + path.string() + " for writing");
  write(out, v);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("vvol: cannot open " + path.string());
  return in;
}

}  // namespace

void write(std::ostream& out, const VoxelGrid& grid) { write_binary(out, grid); }
void write(std::ostream& out, const DamageMask& mask) { write_binary(out, mask); }

void write(std::ostream& out, const ColorVolume& color) {
  write_header(out, Header{color.dims(), ColorVolume::kChannels, Header::DType::kF32});
  for (float f : color.values()) byte_io::put_f32(out, f);
  if (!out) throw std::runtime_error("vvol: write failed");
}

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw std::runtime_error("vvol: bad magic, expected VVOL1");
  Header h;
  bool have_dims = false, have_channels = false, have_dtype = false, have_encoding = false;
  while (std::getline(in, line) && !line.empty()) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "dims") {
      if (!(ss >> h.dims.nx >> h.dims.ny >> h.dims.nz) || h.dims.nx <= 0 || h.dims.ny <= 0 ||
          h.dims.nz <= 0)
        throw std::runtime_error("vvol: malformed dims line");
      have_dims = true;
    } else if (key == "channels") {
      if (!(ss >> h.channels) || (h.channels != 1 && h.channels != 3))
        throw std::runtime_error("vvol: channels must be 1 or 3");
      have_channels = true;
    } else if (key == "dtype") {
      std::string t;
      ss >> t;
      if (t == "u8") {
        h.dtype = Header::DType::kU8;
      } else if (t == "f32") {
        h.dtype = Header::DType::kF32;
      } else {
        throw std::runtime_error("vvol: unsupported dtype '" + t + "'");
      }
      have_dtype = true;
    } else if (key == "encoding") {
      std::string e;
      ss >> e;
      if (e != "raw-le") throw std::runtime_error("vvol: unsupported encoding '" + e + "'");
      have_encoding = true;
    } else {
      throw std::runtime_error("vvol: unknown header key '" + key + "'");
    }
  }
  if (!have_dims || !have_channels || !have_dtype || !have_encoding)
    throw std::runtime_error("vvol: incomplete header");
  return h;
}

VoxelGrid read_grid(std::istream& in) { return read_binary<OccupancyTag>(in); }
DamageMask read_mask(std::istream& in) { return read_binary<MaskTag>(in); }

ColorVolume read_color(std::istream& in) {
  const Header h = read_header(in);
  if (h.channels != 3 || h.dtype != Header::DType::kF32)
    throw std::runtime_error("vvol: expected a 3-channel f32 volume");
  ColorVolume c(h.dims);
  for (float& f : c.values()) f = byte_io::get_f32(in);
  return c;
}

void save(const std::filesystem::path& path, const VoxelGrid& grid) { save_to(path, grid); }
void save(const std::filesystem::path& path, const DamageMask& mask) { save_to(path, mask); }
void save(const std::filesystem::path& path, const ColorVolume& color) { save_to(path, color); }

VoxelGrid load_grid(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_grid(in);
}
DamageMask load_mask(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mask(in);
}
ColorVolume load_color(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_color(in);
}

}  // namespace voxinpaint::vvol
