#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lvtts/nn/attention.hpp"
#include "lvtts/nn/recurrent.hpp"

namespace lvtts::decoder {

enum class Arch { Rnn, Salad };

Arch parse_arch(const std::string& name);
std::string arch_name(Arch arch);

struct DecoderConfig {
  Arch arch = Arch::Salad;
  std::size_t in_dim = 48;   // L + 2
  std::size_t embed = 32;    // H
  std::size_t hidden = 64;   // RNN hidden LSTM
  std::size_t blocks = 2;    // SALAD N
  std::size_t heads = 2;
  std::size_t d_ff = 128;
  std::size_t out_dim = 43;
  double attn_dropout = 0.1;
  double ffn_dropout = 0.5;
  double pos_dropout = 0.5;
  double rnn_dropout = 0.5;

  void validate() const;
};

// c[2i] = sin(t / 10000^(2i/H)), c[2i+1] = cos(t / 10000^(2i/H)).
std::vector<double> positional_code(std::size_t t, std::size_t width);

// LSTM states for the RNN; absolute position of the next frame for SALAD.
struct DecoderState {
  nn::LstmState hidden;
  nn::LstmState output;
  std::size_t offset = 0;
};

// Sequential work done per forward call.
struct PassCounters {
  std::size_t sequential_steps = 0;  // RNN time steps
  std::size_t passes = 0;            // SALAD full-sequence passes
};

class Decoder {
 public:
  explicit Decoder(const DecoderConfig& cfg = {});

  const DecoderConfig& config() const { return cfg_; }
  void init(Rng& rng);
  void collect(nn::ParamList& out);
  nn::ParamList params();
  DecoderState initial_state() const;

  struct BlockTrace {
    Tensor x, mid;  // block input and residual midpoint
    nn::MultiHeadAttention::Trace attn;
    nn::FeedForward::Trace ffn;
    Tensor attn_mask, ffn_mask;
  };
  struct Trace {
    Tensor x, pre;  // embedding input and pre-activation
    Tensor pos_mask;
    std::vector<BlockTrace> blocks;
    Tensor top;  // input of the output layer
    nn::LstmCell::Trace lstm1, lstm2;
    Tensor drop_mask;
  };

  // (T x in_dim) -> (T x out_dim). Dropout is active only when `train`.
  Tensor forward(const Tensor& x, DecoderState& state, bool train, Rng& rng, Trace* trace) const;
  // Accumulates parameter gradients and returns dL/dx.
  Tensor backward(const Trace& trace, const Tensor& dy);

  const PassCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }

  struct Block {
    nn::LayerNorm norm1, norm2;
    nn::MultiHeadAttention attn;
    nn::FeedForward ffn;
  };

  nn::Linear embed;
  nn::LstmCell lstm1, lstm2;
  std::vector<Block> blocks;
  nn::Linear out;

 private:
  Tensor forward_rnn(const Tensor& h, DecoderState& state, bool train, Rng& rng, Trace* trace) const;
  Tensor forward_salad(const Tensor& h, DecoderState& state, bool train, Rng& rng, Trace* trace) const;

  DecoderConfig cfg_;
  mutable PassCounters counters_;
};

// Inference over a whole utterance from a fresh state. UV is thresholded at
// 0.5 (ties voiced) when `binarize_uv` is set.
Tensor predict_features(const Decoder& decoder, const Tensor& linguistic, bool binarize_uv = false);

}  // namespace lvtts::decoder
