#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lvtts/tensor.hpp"

namespace lvtts::nn {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor relu(const Tensor& x);
// Gradient of relu given its input; the derivative at exactly 0 is taken as 0.
Tensor relu_backward(const Tensor& x, const Tensor& dy);

struct XentResult {
  double loss = 0.0;          // nats
  std::vector<double> grad;   // softmax(logits) - onehot(target)
};

XentResult softmax_xent(std::span<const double> logits, std::size_t target);

// Row-wise cross entropy. Returns the summed loss; when dlogits is given it is
// filled with scale * (softmax - onehot) per row.
double softmax_xent_rows(const Tensor& logits, std::span<const std::size_t> targets,
                         Tensor* dlogits, double scale = 1.0);

void softmax_inplace(std::span<double> v);

}  // namespace lvtts::nn
