#include "lvtts/nn/activation.hpp"

#include <algorithm>
#include <limits>

#include "lvtts/errors.hpp"

namespace lvtts::nn {

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  if (x.size() != dy.size()) {
    throw DimensionError("relu backward: x " + shape_string(x.shape()) + ", dy " +
                         shape_string(dy.shape()));
  }
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > 0.0)) dx[i] = 0.0;
  }
  return dx;
}

void softmax_inplace(std::span<double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

XentResult softmax_xent(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size()) {
    throw DomainError("softmax_xent: target class " + std::to_string(target) +
                      " out of range for " + std::to_string(logits.size()) + " classes");
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double x : logits) m = std::max(m, x);
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - m);
  const double log_z = m + std::log(sum);
  XentResult out;
  out.loss = log_z - logits[target];
  out.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.grad[k] = std::exp(logits[k] - log_z);
  out.grad[target] -= 1.0;
  return out;
}

double softmax_xent_rows(const Tensor& logits, std::span<const std::size_t> targets,
                         Tensor* dlogits, double scale) {
  const std::size_t n = logits.rows();
  const std::size_t q = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("softmax_xent_rows: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_string(logits.shape()));
  }
  if (dlogits) *dlogits = Tensor(logits.shape());
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = logits.row(r);
    if (targets[r] >= q) {
      throw DomainError("softmax_xent: target class " + std::to_string(targets[r]) +
                        " out of range for " + std::to_string(q) + " classes");
    }
    double m = row[0];
    for (double x : row) m = std::max(m, x);
    double sum = 0.0;
    for (double x : row) sum += std::exp(x - m);
    const double log_z = m + std::log(sum);
    total += log_z - row[targets[r]];
    if (dlogits) {
      auto g = dlogits->row(r);
      for (std::size_t k = 0; k < q; ++k) g[k] = scale * std::exp(row[k] - log_z);
      g[targets[r]] -= scale;
    }
  }
  return total;
}

}  // namespace lvtts::nn
