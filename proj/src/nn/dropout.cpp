#include "lvtts/nn/dropout.hpp"

#include "lvtts/errors.hpp"

namespace lvtts::nn {

Tensor dropout_forward(const Tensor& x, const DropoutSpec& spec, Rng& rng, Tensor* mask) {
  if (spec.rate < 0.0 || spec.rate >= 1.0) {
    throw DomainError("dropout rate must be in [0, 1), got " + std::to_string(spec.rate));
  }
  if (mask) *mask = Tensor();
  if (!spec.active || spec.rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - spec.rate);
  Tensor m(x.shape());
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    m[i] = rng.uniform() < spec.rate ? 0.0 : keep_scale;
    y[i] *= m[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

Tensor dropout_backward(const Tensor& dy, const Tensor& mask) {
  if (mask.empty()) return dy;
  if (mask.size() != dy.size()) {
    throw DimensionError("dropout backward: mask " + shape_string(mask.shape()) + ", dy " +
                         shape_string(dy.shape()));
  }
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i];
  return dx;
}

}  // namespace lvtts::nn
