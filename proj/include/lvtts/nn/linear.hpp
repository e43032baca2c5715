#pragma once

#include <string>

#include "lvtts/nn/param.hpp"

namespace lvtts::nn {

// y = W x + b applied to every row of x.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in_dim, std::size_t out_dim);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }

  Tensor forward(const Tensor& x) const;
  // Accumulates dW and db; returns dL/dx unless need_dx is false.
  Tensor backward(const Tensor& x, const Tensor& dy, bool need_dx = true);

  void init(Rng& rng);
  void collect(ParamList& out);

  Param weight;  // (out x in)
  Param bias;    // (out)

 private:
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
};

}  // namespace lvtts::nn
