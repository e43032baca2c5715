#pragma once

#include <span>
#include <string>
#include <vector>

#include "lvtts/nn/param.hpp"

namespace lvtts::nn {

// Gated recurrent unit, gates ordered (reset, update, candidate):
//   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
class GruCell {
 public:
  GruCell() = default;
  GruCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  struct Trace {
    Tensor x;            // (T x in)
    Tensor h;            // (T+1 x H), row 0 is the initial state
    Tensor r, z, n, hn;  // (T x H); hn = W_hn h + b_hn
  };

  // Runs T steps over the rows of x. `state` holds the initial hidden vector
  // and receives the final one.
  Tensor forward(const Tensor& x, std::vector<double>& state, Trace* trace) const;
  // dh holds dL/dh_t for every output row. Accumulates parameter gradients,
  // returns dL/dx and optionally dL/dh_0.
  Tensor backward(const Trace& trace, const Tensor& dh, std::vector<double>* dh0 = nullptr);

  std::vector<double> step(std::span<const double> x, std::span<const double> h_prev) const;

  void init(Rng& rng);
  void collect(ParamList& out);

  Param w_ih;  // (3H x in)
  Param w_hh;  // (3H x H)
  Param b_ih;  // (3H)
  Param b_hh;  // (3H)

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

// Long short-term memory cell, gates ordered (input, forget, cell, output):
//   c' = f * c + i * g,  h' = o * tanh(c')
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  LstmState zero_state() const {
    return {std::vector<double>(hidden_dim_, 0.0), std::vector<double>(hidden_dim_, 0.0)};
  }

  struct Trace {
    Tensor x;              // (T x in)
    Tensor h, c;           // (T+1 x H)
    Tensor i, f, g, o;     // (T x H) activated gates
    Tensor tanh_c;         // (T x H)
  };

  Tensor forward(const Tensor& x, LstmState& state, Trace* trace) const;
  Tensor backward(const Trace& trace, const Tensor& dh, LstmState* dstate0 = nullptr);

  LstmState step(std::span<const double> x, const LstmState& prev) const;

  void init(Rng& rng);
  void collect(ParamList& out);

  Param w_ih;  // (4H x in)
  Param w_hh;  // (4H x H)
  Param b_ih;  // (4H)
  Param b_hh;  // (4H)

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
};

}  // namespace lvtts::nn
