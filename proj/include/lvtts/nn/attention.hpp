#pragma once

#include <string>
#include <vector>

#include "lvtts/nn/dropout.hpp"
#include "lvtts/nn/linear.hpp"

namespace lvtts::nn {

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t width, double eps = 1e-5);

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy);

  void collect(ParamList& out);

  Param gain;   // (H), starts at 1
  Param shift;  // (H), starts at 0

 private:
  std::size_t width_ = 0;
  double eps_ = 1e-5;
};

// Unmasked multi-head scaled dot-product self-attention over a (T x H) input.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, std::size_t width, std::size_t heads);

  std::size_t width() const { return width_; }
  std::size_t heads() const { return heads_; }

  struct Trace {
    Tensor x, q, k, v;              // (T x H)
    Tensor context;                 // concatenated head outputs (T x H)
    std::vector<Tensor> weights;    // per head (T x T), rows sum to 1
    std::vector<Tensor> masks;      // per head dropout masks, empty if none
  };

  Tensor forward(const Tensor& x, const DropoutSpec& dropout, Rng& rng, Trace* trace) const;
  Tensor backward(const Trace& trace, const Tensor& dy);

  void init(Rng& rng);
  void collect(ParamList& out);

  Linear query, key, value, output;

 private:
  std::size_t width_ = 0;
  std::size_t heads_ = 1;
};

// Expand to d_ff with ReLU, project back to H.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(const std::string& name, std::size_t width, std::size_t inner);

  struct Trace {
    Tensor x, pre, hidden;
  };

  Tensor forward(const Tensor& x, Trace* trace) const;
  Tensor backward(const Trace& trace, const Tensor& dy);

  void init(Rng& rng);
  void collect(ParamList& out);

  Linear expand, project;
};

}  // namespace lvtts::nn
