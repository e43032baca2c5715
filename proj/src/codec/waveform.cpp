#include "lvtts/codec/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lvtts/binary_io.hpp"
#include "lvtts/errors.hpp"

namespace lvtts::codec {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot read " + path.string());
  return is;
}

}  // namespace

void write_waveform(const std::filesystem::path& path, const Waveform& wav) {
  std::ofstream os = open_out(path);
  io::write_magic(os, "LVWV1");
  io::write_u32(os, wav.sample_rate);
  io::write_u64(os, wav.samples.size());
  for (double s : wav.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto pcm = static_cast<std::int16_t>(std::lround(c * 32767.0));
    io::write_u16(os, static_cast<std::uint16_t>(pcm));
  }
  if (!os) throw Error("write failed: " + path.string());
}

Waveform read_waveform(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  io::expect_magic(is, "LVWV1", path.string());
  Waveform wav;
  wav.sample_rate = io::read_u32(is);
  const std::uint64_t n = io::read_u64(is);
  wav.samples.resize(n);
  for (double& s : wav.samples) {
    s = static_cast<std::int16_t>(io::read_u16(is)) / 32767.0;
  }
  return wav;
}

void write_reals(const std::filesystem::path& path, const std::vector<double>& values) {
  std::ofstream os = open_out(path);
  io::write_u64(os, values.size());
  for (double v : values) io::write_f64(os, v);
  if (!os) throw Error("write failed: " + path.string());
}

std::vector<double> read_reals(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  std::vector<double> out(io::read_u64(is));
  for (double& v : out) v = io::read_f64(is);
  return out;
}

}  // namespace lvtts::codec
