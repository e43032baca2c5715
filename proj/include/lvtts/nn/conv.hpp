#pragma once

#include <string>

#include "lvtts/nn/param.hpp"

namespace lvtts::nn {

// Valid (unpadded) 1-D cross-correlation over the rows of a (T x in) input:
//   y[t][o] = b[o] + sum_i sum_j W[o][i][j] * x[t * stride + j][i]
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string& name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, std::size_t stride = 1);

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t stride() const { return stride_; }
  std::size_t output_length(std::size_t input_length) const;

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy, bool need_dx = true);

  void init(Rng& rng);
  void collect(ParamList& out);

  Param weight;  // (out x in x k)
  Param bias;    // (out)

 private:
  Tensor patches(const Tensor& x) const;

  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::size_t kernel_ = 1;
  std::size_t stride_ = 1;
};

// Transposed convolution with kernel width equal to the stride, so output
// windows never overlap and T input rows become exactly ratio * T rows:
//   y[t * r + k][o] = b[o] + sum_i W[o][i][k] * x[t][i]
class TransposedConv1d {
 public:
  TransposedConv1d() = default;
  TransposedConv1d(const std::string& name, std::size_t in_channels, std::size_t out_channels,
                   std::size_t ratio);

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t ratio() const { return ratio_; }

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy, bool need_dx = true);

  void init(Rng& rng);
  void collect(ParamList& out);

  Param weight;  // (out x in x r)
  Param bias;    // (out)

 private:
  Tensor unfolded_weight() const;  // (r*out x in), row k*out + o

  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::size_t ratio_ = 1;
};

}  // namespace lvtts::nn
