#include "lvtts/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lvtts/errors.hpp"
#include "lvtts/nn/activation.hpp"
#include "lvtts/nn/attention.hpp"
#include "lvtts/nn/conv.hpp"
#include "lvtts/nn/linear.hpp"
#include "lvtts/nn/recurrent.hpp"

namespace lvtts::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradient_check(const std::function<void()>& backprop,
                               const std::function<double()>& loss,
                               std::vector<GradProbe> probes, double eps) {
  if (eps < 1e-6 || eps > 1e-2) {
    throw DomainError("gradient_check: eps must be in [1e-6, 1e-2], got " + std::to_string(eps));
  }
  backprop();
  // Analytic values are copied before any perturbation reruns the model.
  std::vector<std::vector<double>> analytic;
  for (const GradProbe& p : probes) {
    if (p.values.size() != p.analytic.size()) {
      throw DimensionError("gradient_check: probe " + p.name + " has " +
                           std::to_string(p.values.size()) + " values but " +
                           std::to_string(p.analytic.size()) + " gradients");
    }
    analytic.emplace_back(p.analytic.begin(), p.analytic.end());
  }
  GradCheckResult result;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    GradProbe& p = probes[k];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + eps;
      const double up = loss();
      p.values[i] = saved - eps;
      const double down = loss();
      p.values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[k][i], numeric);
      ++result.entries;
      if (err > result.max_relative_error || result.worst.empty()) {
        result.max_relative_error = err;
        result.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

void add_param_probes(const ParamList& params, std::vector<GradProbe>& probes) {
  for (Param* p : params) probes.push_back({p->name, p->value.values(), p->grad.values()});
}

namespace {

void randomize(const ParamList& params, Rng& rng, double scale) {
  for (Param* p : params) {
    for (double& v : p->value.values()) v = rng.uniform(-scale, scale);
  }
}

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

// Probes hold spans, so reruns must write into the same buffers.
void store(std::vector<double>& dst, const std::vector<double>& src) {
  if (dst.size() != src.size()) dst = src;
  else std::copy(src.begin(), src.end(), dst.begin());
}

void store(Tensor& dst, const Tensor& src) {
  if (dst.shape() != src.shape()) dst = src;
  else std::copy(src.storage().begin(), src.storage().end(), dst.storage().begin());
}

LayerCheck finish(std::string layer, const GradCheckResult& r) {
  return {std::move(layer), r.max_relative_error, r.entries};
}

}  // namespace

LayerCheck check_linear(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Linear layer("linear", 3, 2);
  ParamList params;
  layer.collect(params);
  randomize(params, rng, 1.0);
  Tensor x = random_tensor({4, 3}, rng);
  const Tensor w = random_tensor({4, 2}, rng);
  Tensor dx;
  auto backprop = [&] {
    zero_grads(params);
    layer.forward(x);
    store(dx, layer.backward(x, w));
  };
  auto loss = [&] { return weighted_sum(layer.forward(x), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  return finish("linear", gradient_check(backprop, loss, probes, eps));
}

LayerCheck check_relu(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Tensor x({3, 5});
  // Keep inputs clear of the kink so central differences stay one-sided.
  for (double& v : x.values()) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  const Tensor w = random_tensor({3, 5}, rng);
  Tensor dx;
  auto backprop = [&] { store(dx, relu_backward(x, w)); };
  auto loss = [&] { return weighted_sum(relu(x), w); };
  backprop();
  return finish("relu", gradient_check(backprop, loss, {{"x", x.values(), dx.values()}}, eps));
}

LayerCheck check_softmax_xent(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Tensor logits = random_tensor({7}, rng, 3.0);
  const std::size_t target = rng.below(7);
  std::vector<double> grad;
  auto backprop = [&] { store(grad, softmax_xent(logits.values(), target).grad); };
  auto loss = [&] { return softmax_xent(logits.values(), target).loss; };
  backprop();
  return finish("softmax_xent",
                gradient_check(backprop, loss, {{"logits", logits.values(), grad}}, eps));
}

LayerCheck check_gru(std::uint64_t seed, double eps, std::size_t hidden) {
  Rng rng(seed);
  GruCell cell("gru", 3, hidden);
  ParamList params;
  cell.collect(params);
  randomize(params, rng, 0.8);
  Tensor x = random_tensor({4, 3}, rng);
  Tensor h0 = random_tensor({hidden}, rng, 0.8);
  const Tensor w = random_tensor({4, hidden}, rng);
  Tensor dx;
  std::vector<double> dh0;
  auto run = [&](GruCell::Trace* trace) {
    std::vector<double> h(h0.storage());
    return cell.forward(x, h, trace);
  };
  auto backprop = [&] {
    zero_grads(params);
    GruCell::Trace trace;
    run(&trace);
    std::vector<double> d;
    store(dx, cell.backward(trace, w, &d));
    store(dh0, d);
  };
  auto loss = [&] { return weighted_sum(run(nullptr), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  probes.push_back({"h0", h0.values(), dh0});
  return finish("gru", gradient_check(backprop, loss, probes, eps));
}

LayerCheck check_lstm(std::uint64_t seed, double eps) {
  Rng rng(seed);
  LstmCell cell("lstm", 3, 4);
  ParamList params;
  cell.collect(params);
  randomize(params, rng, 0.8);
  Tensor x = random_tensor({4, 3}, rng);
  Tensor h0 = random_tensor({4}, rng, 0.8);
  Tensor c0 = random_tensor({4}, rng, 0.8);
  const Tensor w = random_tensor({4, 4}, rng);
  Tensor dx;
  LstmState d0;
  auto run = [&](LstmCell::Trace* trace) {
    LstmState s{h0.storage(), c0.storage()};
    return cell.forward(x, s, trace);
  };
  auto backprop = [&] {
    zero_grads(params);
    LstmCell::Trace trace;
    run(&trace);
    LstmState d;
    store(dx, cell.backward(trace, w, &d));
    store(d0.h, d.h);
    store(d0.c, d.c);
  };
  auto loss = [&] { return weighted_sum(run(nullptr), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  probes.push_back({"h0", h0.values(), d0.h});
  probes.push_back({"c0", c0.values(), d0.c});
  return finish("lstm", gradient_check(backprop, loss, probes, eps));
}

LayerCheck check_conv1d(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Conv1d conv("conv", 2, 3, 3, 2);
  ParamList params;
  conv.collect(params);
  randomize(params, rng, 1.0);
  Tensor x = random_tensor({2, 9, 2}, rng);
  const Tensor w = random_tensor({2, 4, 3}, rng);
  Tensor dx;
  auto backprop = [&] {
    zero_grads(params);
    store(dx, conv.backward(x, w));
  };
  auto loss = [&] { return weighted_sum(conv.forward(x), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  return finish("conv1d", gradient_check(backprop, loss, probes, eps));
}

LayerCheck check_tconv1d(std::uint64_t seed, double eps) {
  Rng rng(seed);
  TransposedConv1d conv("tconv", 3, 2, 4);
  ParamList params;
  conv.collect(params);
  randomize(params, rng, 1.0);
  Tensor x = random_tensor({3, 3}, rng);
  const Tensor w = random_tensor({12, 2}, rng);
  Tensor dx;
  auto backprop = [&] {
    zero_grads(params);
    store(dx, conv.backward(x, w));
  };
  auto loss = [&] { return weighted_sum(conv.forward(x), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  return finish("tconv1d", gradient_check(backprop, loss, probes, eps));
}

LayerCheck check_layer_norm(std::uint64_t seed, double eps) {
  Rng rng(seed);
  LayerNorm norm("norm", 5);
  ParamList params;
  norm.collect(params);
  randomize(params, rng, 1.0);
  Tensor x = random_tensor({3, 5}, rng);
  const Tensor w = random_tensor({3, 5}, rng);
  Tensor dx;
  auto backprop = [&] {
    zero_grads(params);
    store(dx, norm.backward(x, w));
  };
  auto loss = [&] { return weighted_sum(norm.forward(x), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  return finish("layer_norm", gradient_check(backprop, loss, probes, eps));
}

LayerCheck check_attention(std::uint64_t seed, double eps, bool with_dropout) {
  Rng rng(seed);
  MultiHeadAttention mha("mha", 4, 2);
  ParamList params;
  mha.collect(params);
  randomize(params, rng, 1.0);
  Tensor x = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  const DropoutSpec spec{with_dropout ? 0.3 : 0.0, with_dropout};
  const std::uint64_t mask_seed = rng.next();
  Tensor dx;
  auto run = [&](MultiHeadAttention::Trace* trace) {
    Rng mask_rng(mask_seed);
    return mha.forward(x, spec, mask_rng, trace);
  };
  auto backprop = [&] {
    zero_grads(params);
    MultiHeadAttention::Trace trace;
    run(&trace);
    store(dx, mha.backward(trace, w));
  };
  auto loss = [&] { return weighted_sum(run(nullptr), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  return finish(with_dropout ? "attention_dropout" : "attention",
                gradient_check(backprop, loss, probes, eps));
}

LayerCheck check_feed_forward(std::uint64_t seed, double eps) {
  Rng rng(seed);
  FeedForward ffn("ffn", 4, 6);
  ParamList params;
  ffn.collect(params);
  randomize(params, rng, 1.0);
  Tensor x = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  Tensor dx;
  auto backprop = [&] {
    zero_grads(params);
    FeedForward::Trace trace;
    ffn.forward(x, &trace);
    store(dx, ffn.backward(trace, w));
  };
  auto loss = [&] { return weighted_sum(ffn.forward(x, nullptr), w); };
  backprop();
  std::vector<GradProbe> probes;
  add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  return finish("feed_forward", gradient_check(backprop, loss, probes, eps));
}

std::vector<LayerCheck> check_layers(std::uint64_t base_seed, std::size_t seeds, double eps) {
  using Check = std::function<LayerCheck(std::uint64_t)>;
  const std::vector<Check> checks = {
      [&](std::uint64_t s) { return check_linear(s, eps); },
      [&](std::uint64_t s) { return check_relu(s, eps); },
      [&](std::uint64_t s) { return check_softmax_xent(s, eps); },
      [&](std::uint64_t s) { return check_gru(s, eps); },
      [&](std::uint64_t s) { return check_lstm(s, eps); },
      [&](std::uint64_t s) { return check_conv1d(s, eps); },
      [&](std::uint64_t s) { return check_tconv1d(s, eps); },
      [&](std::uint64_t s) { return check_layer_norm(s, eps); },
      [&](std::uint64_t s) { return check_attention(s, eps, false); },
      [&](std::uint64_t s) { return check_attention(s, eps, true); },
      [&](std::uint64_t s) { return check_feed_forward(s, eps); },
  };
  std::vector<LayerCheck> out;
  for (std::size_t c = 0; c < checks.size(); ++c) {
    LayerCheck worst;
    for (std::size_t k = 0; k < seeds; ++k) {
      LayerCheck r = checks[c](mix_seed(base_seed, c * 1000 + k));
      if (worst.layer.empty() || r.max_relative_error > worst.max_relative_error) {
        const std::size_t total = worst.entries + r.entries;
        worst = r;
        worst.entries = total;
      } else {
        worst.entries += r.entries;
      }
    }
    out.push_back(worst);
  }
  return out;
}

}  // namespace lvtts::nn
