#include "lvtts/nn/conv.hpp"

#include "lvtts/errors.hpp"

namespace lvtts::nn {

namespace {

// Splits a (T x C) or (B x T x C) tensor into per-sequence (T x C) matrices.
std::vector<Tensor> sequences(const Tensor& x) {
  if (x.rank() == 3) {
    std::vector<Tensor> out;
    const std::size_t len = x.dim(1);
    for (std::size_t b = 0; b < x.dim(0); ++b) out.push_back(x.slice_rows(b * len, (b + 1) * len));
    return out;
  }
  if (x.rank() == 2) return {x};
  throw DimensionError("conv input must be (time x channels) or (batch x time x channels), got " +
                       shape_string(x.shape()));
}

Tensor join(const std::vector<Tensor>& parts, bool batched) {
  Tensor out = stack_rows(parts);
  if (batched) out.reshape({parts.size(), parts.front().rows(), parts.front().cols()});
  return out;
}

}  // namespace

Conv1d::Conv1d(const std::string& name, std::size_t in_channels, std::size_t out_channels,
               std::size_t kernel, std::size_t stride)
    : weight(name + ".weight", {out_channels, in_channels, kernel}),
      bias(name + ".bias", {out_channels}),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride) {
  if (kernel == 0 || stride == 0) throw DimensionError("conv " + name + ": kernel and stride must be >= 1");
}

std::size_t Conv1d::output_length(std::size_t input_length) const {
  if (input_length < kernel_) {
    throw DimensionError("conv " + weight.name + ": input length " + std::to_string(input_length) +
                         " shorter than kernel " + std::to_string(kernel_));
  }
  return (input_length - kernel_) / stride_ + 1;
}

Tensor Conv1d::patches(const Tensor& x) const {
  const std::size_t t_out = output_length(x.rows());
  const std::size_t width = in_ * kernel_;
  Tensor p = Tensor::matrix(t_out, width);
  for (std::size_t t = 0; t < t_out; ++t) {
    auto row = p.row(t);
    for (std::size_t i = 0; i < in_; ++i) {
      for (std::size_t j = 0; j < kernel_; ++j) row[i * kernel_ + j] = x.at(t * stride_ + j, i);
    }
  }
  return p;
}

Tensor Conv1d::forward(const Tensor& x) const {
  if (x.cols() != in_) {
    throw DimensionError("conv " + weight.name + ": input " + shape_string(x.shape()) +
                         " does not match kernel " + shape_string(weight.value.shape()));
  }
  const Tensor w_t = transpose(weight.value.reshaped({out_, in_ * kernel_}));
  std::vector<Tensor> outs;
  for (const Tensor& seq : sequences(x)) {
    const Tensor p = patches(seq);
    Tensor y = Tensor::matrix(p.rows(), out_);
    for (std::size_t t = 0; t < p.rows(); ++t) {
      auto row = y.row(t);
      for (std::size_t o = 0; o < out_; ++o) row[o] = bias.value[o];
    }
    kernels::gemm(p.data(), w_t.data(), y.data(), p.rows(), in_ * kernel_, out_, true);
    outs.push_back(std::move(y));
  }
  return join(outs, x.rank() == 3);
}

Tensor Conv1d::backward(const Tensor& x, const Tensor& dy, bool need_dx) {
  const std::vector<Tensor> xs = sequences(x);
  const std::vector<Tensor> dys = sequences(dy);
  if (xs.size() != dys.size() || dy.cols() != out_) {
    throw DimensionError("conv " + weight.name + " backward: x " + shape_string(x.shape()) +
                         ", dy " + shape_string(dy.shape()));
  }
  const std::size_t width = in_ * kernel_;
  std::vector<Tensor> dxs;
  for (std::size_t b = 0; b < xs.size(); ++b) {
    const Tensor p = patches(xs[b]);
    const Tensor& g = dys[b];
    if (g.rows() != p.rows()) {
      throw DimensionError("conv " + weight.name + " backward: dy " + shape_string(dy.shape()) +
                           " does not match output length " + std::to_string(p.rows()));
    }
    kernels::gemm_tn(g.data(), p.data(), weight.grad.data(), p.rows(), out_, width, true);
    for (std::size_t t = 0; t < g.rows(); ++t) {
      for (std::size_t o = 0; o < out_; ++o) bias.grad[o] += g.at(t, o);
    }
    if (!need_dx) continue;
    Tensor dp = Tensor::matrix(p.rows(), width);
    kernels::gemm(g.data(), weight.value.data(), dp.data(), p.rows(), out_, width, false);
    Tensor dx = Tensor::matrix(xs[b].rows(), in_);
    for (std::size_t t = 0; t < p.rows(); ++t) {
      for (std::size_t i = 0; i < in_; ++i) {
        for (std::size_t j = 0; j < kernel_; ++j) dx.at(t * stride_ + j, i) += dp.at(t, i * kernel_ + j);
      }
    }
    dxs.push_back(std::move(dx));
  }
  if (!need_dx) return {};
  return join(dxs, x.rank() == 3);
}

void Conv1d::init(Rng& rng) {
  xavier_uniform(weight, rng);
  bias.value.fill(0.0);
}

void Conv1d::collect(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

TransposedConv1d::TransposedConv1d(const std::string& name, std::size_t in_channels,
                                   std::size_t out_channels, std::size_t ratio)
    : weight(name + ".weight", {out_channels, in_channels, ratio}),
      bias(name + ".bias", {out_channels}),
      in_(in_channels),
      out_(out_channels),
      ratio_(ratio) {
  if (ratio == 0) throw DimensionError("transposed conv " + name + ": ratio must be >= 1");
}

Tensor TransposedConv1d::unfolded_weight() const {
  Tensor m = Tensor::matrix(ratio_ * out_, in_);
  for (std::size_t o = 0; o < out_; ++o) {
    for (std::size_t i = 0; i < in_; ++i) {
      for (std::size_t k = 0; k < ratio_; ++k) m.at(k * out_ + o, i) = weight.value.at(o, i, k);
    }
  }
  return m;
}

Tensor TransposedConv1d::forward(const Tensor& x) const {
  if (x.cols() != in_) {
    throw DimensionError("transposed conv " + weight.name + ": input " + shape_string(x.shape()) +
                         " does not match kernel " + shape_string(weight.value.shape()));
  }
  const Tensor m_t = transpose(unfolded_weight());
  std::vector<Tensor> outs;
  for (const Tensor& seq : sequences(x)) {
    const std::size_t t_len = seq.rows();
    Tensor z = Tensor::matrix(t_len, ratio_ * out_);
    for (std::size_t t = 0; t < t_len; ++t) {
      auto row = z.row(t);
      for (std::size_t k = 0; k < ratio_; ++k) {
        for (std::size_t o = 0; o < out_; ++o) row[k * out_ + o] = bias.value[o];
      }
    }
    kernels::gemm(seq.data(), m_t.data(), z.data(), t_len, in_, ratio_ * out_, true);
    z.reshape({t_len * ratio_, out_});
    outs.push_back(std::move(z));
  }
  return join(outs, x.rank() == 3);
}

Tensor TransposedConv1d::backward(const Tensor& x, const Tensor& dy, bool need_dx) {
  const std::vector<Tensor> xs = sequences(x);
  const std::vector<Tensor> dys = sequences(dy);
  if (xs.size() != dys.size() || dy.cols() != out_) {
    throw DimensionError("transposed conv " + weight.name + " backward: x " +
                         shape_string(x.shape()) + ", dy " + shape_string(dy.shape()));
  }
  const Tensor m = unfolded_weight();
  Tensor dm = Tensor::matrix(ratio_ * out_, in_);
  std::vector<Tensor> dxs;
  for (std::size_t b = 0; b < xs.size(); ++b) {
    const std::size_t t_len = xs[b].rows();
    if (dys[b].rows() != t_len * ratio_) {
      throw DimensionError("transposed conv " + weight.name + " backward: dy " +
                           shape_string(dy.shape()) + " for input length " + std::to_string(t_len));
    }
    const Tensor dz = dys[b].reshaped({t_len, ratio_ * out_});
    kernels::gemm_tn(dz.data(), xs[b].data(), dm.data(), t_len, ratio_ * out_, in_, true);
    for (std::size_t r = 0; r < dys[b].rows(); ++r) {
      for (std::size_t o = 0; o < out_; ++o) bias.grad[o] += dys[b].at(r, o);
    }
    if (!need_dx) continue;
    Tensor dx = Tensor::matrix(t_len, in_);
    kernels::gemm(dz.data(), m.data(), dx.data(), t_len, ratio_ * out_, in_, false);
    dxs.push_back(std::move(dx));
  }
  for (std::size_t o = 0; o < out_; ++o) {
    for (std::size_t i = 0; i < in_; ++i) {
      for (std::size_t k = 0; k < ratio_; ++k) weight.grad.at(o, i, k) += dm.at(k * out_ + o, i);
    }
  }
  if (!need_dx) return {};
  return join(dxs, x.rank() == 3);
}

void TransposedConv1d::init(Rng& rng) {
  xavier_uniform(weight, rng);
  bias.value.fill(0.0);
}

void TransposedConv1d::collect(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

}  // namespace lvtts::nn
