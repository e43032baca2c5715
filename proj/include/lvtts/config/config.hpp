#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lvtts/codec/mulaw.hpp"
#include "lvtts/decoder/decoder.hpp"
#include "lvtts/eval/benchmark.hpp"
#include "lvtts/features/synth.hpp"
#include "lvtts/trainer/train.hpp"
#include "lvtts/vocoder/model.hpp"

namespace lvtts::config {

// Flat "[section]" + "key = value" text. Every key is declared with a default;
// anything else is rejected. Lines starting with '#' are comments.
class Config {
 public:
  // All declared keys at their defaults.
  Config();

  void parse_text(const std::string& text, const std::string& origin = "<text>");
  void parse_file(const std::filesystem::path& path);
  // "section.key=value", with or without leading dashes.
  void apply_override(const std::string& arg);
  void set(const std::string& dotted_key, const std::string& value);
  const std::string& get(const std::string& dotted_key) const;

  std::string get_string(const std::string& key) const { return get(key); }
  std::int64_t get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  // Every key in declaration order, grouped by section.
  std::string resolved() const;
  void write_resolved(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
};

// Typed view of a Config. Stage seeds are derived from experiment.seed.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  features::SynthSpec corpus;
  decoder::DecoderConfig decoder;
  trainer::DecoderTrainConfig decoder_train;
  vocoder::TierConfig vocoder;
  codec::CodecConfig codec;
  trainer::VocoderTrainConfig vocoder_train;
  double temperature = 1.0;
  std::size_t synth_utterances = 2;
  std::size_t hist_bins = 40;
  double hist_lo_hz = 50.0;
  double hist_hi_hz = 300.0;
  eval::BenchOptions bench;
  bool bench_vocoder = false;
};

// Throws ConfigError on any invalid value.
ExperimentConfig typed(const Config& cfg);

// Applies LV_SEED from the environment when set.
void apply_env(Config& cfg);

}  // namespace lvtts::config
