#include "lvtts/nn/linear.hpp"

#include "lvtts/errors.hpp"

namespace lvtts::nn {

Linear::Linear(const std::string& name, std::size_t in_dim, std::size_t out_dim)
    : weight(name + ".weight", {out_dim, in_dim}),
      bias(name + ".bias", {out_dim}),
      in_dim_(in_dim),
      out_dim_(out_dim) {}

Tensor Linear::forward(const Tensor& x) const {
  if (x.cols() != in_dim_) {
    throw DimensionError("linear " + weight.name + ": input " + shape_string(x.shape()) +
                         " does not match weight " + shape_string(weight.value.shape()));
  }
  Shape out_shape = x.shape();
  out_shape.back() = out_dim_;
  Tensor y(out_shape);
  const std::size_t n = x.rows();
  for (std::size_t r = 0; r < n; ++r) {
    auto yr = y.row(r);
    for (std::size_t o = 0; o < out_dim_; ++o) yr[o] = bias.value[o];
  }
  const Tensor wt = transpose(weight.value);
  kernels::gemm(x.data(), wt.data(), y.data(), n, in_dim_, out_dim_, true);
  return y;
}

Tensor Linear::backward(const Tensor& x, const Tensor& dy, bool need_dx) {
  if (dy.cols() != out_dim_ || dy.rows() != x.rows() || x.cols() != in_dim_) {
    throw DimensionError("linear " + weight.name + " backward: x " + shape_string(x.shape()) +
                         ", dy " + shape_string(dy.shape()));
  }
  const std::size_t n = x.rows();
  kernels::gemm_tn(dy.data(), x.data(), weight.grad.data(), n, out_dim_, in_dim_, true);
  for (std::size_t r = 0; r < n; ++r) {
    const auto g = dy.row(r);
    for (std::size_t o = 0; o < out_dim_; ++o) bias.grad[o] += g[o];
  }
  if (!need_dx) return {};
  Tensor dx(x.shape());
  kernels::gemm(dy.data(), weight.value.data(), dx.data(), n, out_dim_, in_dim_, false);
  return dx;
}

void Linear::init(Rng& rng) {
  xavier_uniform(weight, rng);
  bias.value.fill(0.0);
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

}  // namespace lvtts::nn
