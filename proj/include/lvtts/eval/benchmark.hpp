#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lvtts/decoder/decoder.hpp"
#include "lvtts/vocoder/model.hpp"

namespace lvtts::eval {

struct LatencyPoint {
  std::string model_id;
  double duration_s = 0.0;  // generated audio
  std::size_t frames = 0;
  double wall_s = 0.0;      // steady clock
  std::size_t sequential_steps = 0;
  std::size_t passes = 0;
};

struct BenchOptions {
  std::vector<double> lengths_s = {1, 2, 3, 4, 5};
  std::size_t repetitions = 3;
  std::uint32_t sample_rate = 16000;
  std::uint64_t seed = 0;
};

// Times decoding of random linguistic input of each length. Every length gets
// one unrecorded warm-up run, then the repetitions cycle over all lengths.
// With a vocoder the predicted frames are also turned into samples.
std::vector<LatencyPoint> latency_benchmark(const decoder::Decoder& decoder, const std::string& model_id,
                                            const BenchOptions& opts,
                                            const vocoder::VocoderModel* vocoder = nullptr);

// Columns: model_id, duration_s, frames, wall_s, sequential_steps, passes.
void write_latency_tsv(const std::filesystem::path& path, const std::vector<LatencyPoint>& points);

}  // namespace lvtts::eval
