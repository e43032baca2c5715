#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lvtts/codec/mulaw.hpp"
#include "lvtts/nn/conv.hpp"
#include "lvtts/nn/linear.hpp"
#include "lvtts/nn/recurrent.hpp"

namespace lvtts::vocoder {

struct TierConfig {
  std::size_t fs_top = 16;
  std::size_t fs_mid = 4;
  std::size_t hidden = 48;
  std::size_t cond_dim = 43;
  int levels = 256;
  std::size_t frame_stride = 80;  // samples per conditioning frame

  std::size_t ratio() const { return fs_top / fs_mid; }
  // Throws ConfigError on inconsistent sizes.
  void validate() const;
  std::size_t parameter_count() const;
};

// Recurrent state of both upper tiers plus the last fs_top input values.
struct VocoderState {
  std::vector<double> top1, top2, mid1, mid2;
  std::vector<double> history;
};

struct StepCounters {
  std::size_t top_steps = 0;
  std::size_t mid_steps = 0;
  std::size_t sample_steps = 0;
  std::size_t cond_frames = 0;
};

// Three tiers. The top tier sees the previous fs_top samples and one
// conditioning vector, the mid tier the previous fs_mid samples plus its row
// of the upsampled top output, and the sample tier the previous fs_mid samples
// plus its row of the upsampled mid output. Sample inputs are dequantized
// companded values.
class VocoderModel {
 public:
  explicit VocoderModel(const TierConfig& cfg = {});

  const TierConfig& config() const { return cfg_; }
  void init(Rng& rng);
  void collect(nn::ParamList& out);
  nn::ParamList params();

  VocoderState initial_state() const;
  // Input value fed for silence.
  double silence() const;

  // Per-tier steps used during generation.
  // Returns (ratio x hidden) conditioning rows for the mid tier.
  Tensor top_step(std::span<const double> frame, std::span<const double> cond, VocoderState& state) const;
  // Returns (fs_mid x hidden) rows for the sample tier.
  Tensor mid_step(std::span<const double> frame, std::span<const double> top_cond, VocoderState& state) const;
  std::vector<double> sample_logits(std::span<const double> prev, std::span<const double> cond) const;

  struct WindowTrace {
    Tensor top_x, cond, top_h2;
    nn::GruCell::Trace top1, top2;
    Tensor mid_x, mid_h2;
    nn::GruCell::Trace mid1, mid2;
    Tensor sample_x, act;
  };

  // Teacher-forced logits for one window of `len` positions.
  // `inputs` holds fs_top history values followed by the len window values;
  // `cond` has one row per top step (len / fs_top rows). Updates `state`.
  Tensor forward_window(std::span<const double> inputs, const Tensor& cond, VocoderState& state,
                        WindowTrace* trace) const;
  // Accumulates parameter gradients; returns dL/dcond when need_dcond.
  Tensor backward_window(const WindowTrace& trace, const Tensor& dlogits, bool need_dcond);

  nn::Conv1d top_input, top_cond;
  nn::GruCell top_gru1, top_gru2;
  nn::TransposedConv1d top_up;
  nn::Conv1d mid_input;
  nn::GruCell mid_gru1, mid_gru2;
  nn::TransposedConv1d mid_up;
  nn::Linear sample_hidden, sample_out;

 private:
  TierConfig cfg_;
};

// Conditioning rows for top steps covering [start, start + len): each top
// step takes the frame containing its first sample.
Tensor cond_rows(const Tensor& frames, const TierConfig& cfg, std::size_t start, std::size_t len);
// Folds gradients of cond_rows back onto frame rows (accumulating).
void scatter_cond_grad(const Tensor& drows, const TierConfig& cfg, std::size_t start, Tensor& dframes);

struct NllResult {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

// Mean cross entropy of the true classes under teacher forcing, evaluated in
// windows of `window` samples with state threaded between them.
NllResult teacher_forced_nll(const VocoderModel& model, std::span<const int> classes, const Tensor& cond,
                             std::size_t window, const codec::CodecConfig& codec = {});

// Logits for every position of the sequence in a single window.
Tensor teacher_forced_logits(const VocoderModel& model, std::span<const int> classes, const Tensor& cond,
                             const codec::CodecConfig& codec = {});

struct Generated {
  std::vector<double> samples;
  std::vector<int> classes;
  StepCounters counters;
};

// Autoregressive sampling; temperature 0 takes the argmax class.
Generated generate(const VocoderModel& model, const Tensor& cond, std::size_t n_samples, Rng& rng,
                   double temperature = 1.0, const codec::CodecConfig& codec = {});

}  // namespace lvtts::vocoder
