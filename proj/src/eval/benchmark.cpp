#include "lvtts/eval/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "lvtts/errors.hpp"
#include "lvtts/eval/metrics.hpp"
#include "lvtts/features/acoustic.hpp"

namespace lvtts::eval {

std::vector<LatencyPoint> latency_benchmark(const decoder::Decoder& decoder, const std::string& model_id,
                                            const BenchOptions& opts, const vocoder::VocoderModel* vocoder) {
  using Clock = std::chrono::steady_clock;
  static_assert(Clock::is_steady);
  const double frame_rate = static_cast<double>(opts.sample_rate) / static_cast<double>(features::kStride);
  Rng rng(opts.seed);
  decoder::Decoder model = decoder;
  std::vector<std::size_t> frames;
  std::vector<Tensor> inputs;
  for (double len : opts.lengths_s) {
    if (!(len > 0.0)) throw DomainError("latency_benchmark: lengths must be positive");
    frames.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(len * frame_rate))));
    Tensor x = Tensor::matrix(frames.back(), model.config().in_dim);
    for (double& v : x.values()) v = rng.uniform(0.0, 1.0);
    inputs.push_back(std::move(x));
  }

  auto run = [&](std::size_t i) {
    const Tensor y = decoder::predict_features(model, inputs[i], true);
    if (vocoder) {
      Rng srng(opts.seed);
      vocoder::generate(*vocoder, y, frames[i] * features::kStride, srng);
    }
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) run(i);

  // Repetitions cycle over all lengths so slow stretches of the machine are
  // not confounded with one length. Points are reported length-major.
  std::vector<LatencyPoint> points(inputs.size() * opts.repetitions);
  for (std::size_t r = 0; r < opts.repetitions; ++r) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      model.reset_counters();
      const auto t0 = Clock::now();
      run(i);
      const auto t1 = Clock::now();
      LatencyPoint& p = points[i * opts.repetitions + r];
      p.model_id = model_id;
      p.duration_s = static_cast<double>(frames[i]) / frame_rate;
      p.frames = frames[i];
      p.wall_s = std::chrono::duration<double>(t1 - t0).count();
      p.sequential_steps = model.counters().sequential_steps;
      p.passes = model.counters().passes;
    }
  }
  return points;
}

void write_latency_tsv(const std::filesystem::path& path, const std::vector<LatencyPoint>& points) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "model_id\tduration_s\tframes\twall_s\tsequential_steps\tpasses\n";
  for (const LatencyPoint& p : points) {
    os << p.model_id << '\t' << format_real(p.duration_s) << '\t' << p.frames << '\t' << format_real(p.wall_s) << '\t'
       << p.sequential_steps << '\t' << p.passes << '\n';
  }
}

}  // namespace lvtts::eval
