#include "lvtts/nn/attention.hpp"

#include <cmath>

#include "lvtts/errors.hpp"
#include "lvtts/nn/activation.hpp"

namespace lvtts::nn {

LayerNorm::LayerNorm(const std::string& name, std::size_t width, double eps)
    : gain(name + ".gain", {width}), shift(name + ".shift", {width}), width_(width), eps_(eps) {
  gain.value.fill(1.0);
}

Tensor LayerNorm::forward(const Tensor& x) const {
  if (x.cols() != width_) {
    throw DimensionError("layer norm " + gain.name + ": input " + shape_string(x.shape()) +
                         " does not match width " + std::to_string(width_));
  }
  Tensor y(x.shape());
  const double n = static_cast<double>(width_);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps_);
    auto yr = y.row(r);
    for (std::size_t j = 0; j < width_; ++j) {
      yr[j] = gain.value[j] * (xr[j] - mean) * inv + shift.value[j];
    }
  }
  return y;
}

Tensor LayerNorm::backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(x.shape());
  const double n = static_cast<double>(width_);
  std::vector<double> xhat(width_), dxhat(width_);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto gr = dy.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps_);
    double mean_d = 0.0;
    double mean_dx = 0.0;
    for (std::size_t j = 0; j < width_; ++j) {
      xhat[j] = (xr[j] - mean) * inv;
      dxhat[j] = gr[j] * gain.value[j];
      gain.grad[j] += gr[j] * xhat[j];
      shift.grad[j] += gr[j];
      mean_d += dxhat[j];
      mean_dx += dxhat[j] * xhat[j];
    }
    mean_d /= n;
    mean_dx /= n;
    auto dr = dx.row(r);
    for (std::size_t j = 0; j < width_; ++j) dr[j] = inv * (dxhat[j] - mean_d - xhat[j] * mean_dx);
  }
  return dx;
}

void LayerNorm::collect(ParamList& out) {
  out.push_back(&gain);
  out.push_back(&shift);
}

MultiHeadAttention::MultiHeadAttention(const std::string& name, std::size_t width,
                                       std::size_t heads)
    : query(name + ".query", width, width),
      key(name + ".key", width, width),
      value(name + ".value", width, width),
      output(name + ".output", width, width),
      width_(width),
      heads_(heads) {
  if (heads == 0 || width % heads != 0) {
    throw DimensionError("attention " + name + ": width " + std::to_string(width) +
                         " not divisible by " + std::to_string(heads) + " heads");
  }
}

Tensor MultiHeadAttention::forward(const Tensor& x, const DropoutSpec& dropout, Rng& rng,
                                   Trace* trace) const {
  if (x.cols() != width_ || x.rank() != 2) {
    throw DimensionError("attention " + query.weight.name + ": input " + shape_string(x.shape()) +
                         " must be (time x " + std::to_string(width_) + ")");
  }
  const std::size_t len = x.rows();
  const std::size_t d = width_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor q = query.forward(x);
  Tensor k = key.forward(x);
  Tensor v = value.forward(x);
  Tensor context = Tensor::matrix(len, width_);
  std::vector<Tensor> weights, masks;
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t off = h * d;
    Tensor a = Tensor::matrix(len, len);
    for (std::size_t i = 0; i < len; ++i) {
      auto row = a.row(i);
      for (std::size_t j = 0; j < len; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += q.at(i, off + c) * k.at(j, off + c);
        row[j] = s * scale;
      }
      softmax_inplace(row);
    }
    Tensor mask;
    const Tensor used = dropout_forward(a, dropout, rng, &mask);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = 0; j < len; ++j) {
        const double w = used.at(i, j);
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) context.at(i, off + c) += w * v.at(j, off + c);
      }
    }
    weights.push_back(std::move(a));
    masks.push_back(std::move(mask));
  }
  Tensor y = output.forward(context);
  if (trace) {
    trace->x = x;
    trace->q = std::move(q);
    trace->k = std::move(k);
    trace->v = std::move(v);
    trace->context = std::move(context);
    trace->weights = std::move(weights);
    trace->masks = std::move(masks);
  }
  return y;
}

Tensor MultiHeadAttention::backward(const Trace& trace, const Tensor& dy) {
  const std::size_t len = trace.x.rows();
  const std::size_t d = width_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Tensor dcontext = output.backward(trace.context, dy);
  Tensor dq = Tensor::matrix(len, width_);
  Tensor dk = Tensor::matrix(len, width_);
  Tensor dv = Tensor::matrix(len, width_);
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t off = h * d;
    const Tensor& a = trace.weights[h];
    const Tensor& mask = trace.masks[h];
    Tensor ds = Tensor::matrix(len, len);
    for (std::size_t i = 0; i < len; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const double m = mask.empty() ? 1.0 : mask.at(i, j);
        double da = 0.0;
        for (std::size_t c = 0; c < d; ++c) da += dcontext.at(i, off + c) * trace.v.at(j, off + c);
        const double w_used = a.at(i, j) * m;
        if (w_used != 0.0) {
          for (std::size_t c = 0; c < d; ++c) dv.at(j, off + c) += w_used * dcontext.at(i, off + c);
        }
        ds.at(i, j) = da * m;
        dot += ds.at(i, j) * a.at(i, j);
      }
      for (std::size_t j = 0; j < len; ++j) ds.at(i, j) = a.at(i, j) * (ds.at(i, j) - dot);
    }
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = 0; j < len; ++j) {
        const double g = ds.at(i, j) * scale;
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) {
          dq.at(i, off + c) += g * trace.k.at(j, off + c);
          dk.at(j, off + c) += g * trace.q.at(i, off + c);
        }
      }
    }
  }
  Tensor dx = query.backward(trace.x, dq);
  dx += key.backward(trace.x, dk);
  dx += value.backward(trace.x, dv);
  return dx;
}

void MultiHeadAttention::init(Rng& rng) {
  query.init(rng);
  key.init(rng);
  value.init(rng);
  output.init(rng);
}

void MultiHeadAttention::collect(ParamList& out) {
  query.collect(out);
  key.collect(out);
  value.collect(out);
  output.collect(out);
}

FeedForward::FeedForward(const std::string& name, std::size_t width, std::size_t inner)
    : expand(name + ".expand", width, inner), project(name + ".project", inner, width) {}

Tensor FeedForward::forward(const Tensor& x, Trace* trace) const {
  Tensor pre = expand.forward(x);
  Tensor hidden = relu(pre);
  Tensor y = project.forward(hidden);
  if (trace) {
    trace->x = x;
    trace->pre = std::move(pre);
    trace->hidden = std::move(hidden);
  }
  return y;
}

Tensor FeedForward::backward(const Trace& trace, const Tensor& dy) {
  const Tensor dhidden = project.backward(trace.hidden, dy);
  return expand.backward(trace.x, relu_backward(trace.pre, dhidden));
}

void FeedForward::init(Rng& rng) {
  expand.init(rng);
  project.init(rng);
}

void FeedForward::collect(ParamList& out) {
  expand.collect(out);
  project.collect(out);
}

}  // namespace lvtts::nn
