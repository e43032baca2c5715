#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lvtts::codec {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  std::uint32_t sample_rate = 16000;
};

// "LVWV1", u32 rate, u64 count, int16 PCM. Samples are clipped to [-1, 1]
// and scaled by 32767 on write.
void write_waveform(const std::filesystem::path& path, const Waveform& wav);
Waveform read_waveform(const std::filesystem::path& path);

// Bare little-endian f64 array: u64 count then values.
void write_reals(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> read_reals(const std::filesystem::path& path);

}  // namespace lvtts::codec
