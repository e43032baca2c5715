#include "lvtts/nn/recurrent.hpp"

#include <cmath>

#include "lvtts/errors.hpp"
#include "lvtts/nn/activation.hpp"

namespace lvtts::nn {

namespace {

void check_state(const std::string& name, std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw DimensionError(name + ": state has " + std::to_string(got) + " entries, cell has " +
                         std::to_string(expected) + " hidden units");
  }
}

// rows of `gates` = bias + x W^T
Tensor input_projection(const Tensor& x, const Param& w, const Param& b) {
  const std::size_t t_len = x.rows();
  const std::size_t g = w.value.dim(0);
  Tensor out = Tensor::matrix(t_len, g);
  for (std::size_t t = 0; t < t_len; ++t) {
    auto row = out.row(t);
    for (std::size_t k = 0; k < g; ++k) row[k] = b.value[k];
  }
  const Tensor wt = transpose(w.value);
  kernels::gemm(x.data(), wt.data(), out.data(), t_len, x.cols(), g, true);
  return out;
}

void add_column_sums(const Tensor& m, Tensor& into) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t k = 0; k < m.cols(); ++k) into[k] += row[k];
  }
}

}  // namespace

GruCell::GruCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim)
    : w_ih(name + ".w_ih", {3 * hidden_dim, input_dim}),
      w_hh(name + ".w_hh", {3 * hidden_dim, hidden_dim}),
      b_ih(name + ".b_ih", {3 * hidden_dim}),
      b_hh(name + ".b_hh", {3 * hidden_dim}),
      input_dim_(input_dim),
      hidden_dim_(hidden_dim) {}

Tensor GruCell::forward(const Tensor& x, std::vector<double>& state, Trace* trace) const {
  if (x.cols() != input_dim_) {
    throw DimensionError("gru " + w_ih.name + ": input " + shape_string(x.shape()) +
                         " does not match weight " + shape_string(w_ih.value.shape()));
  }
  check_state("gru " + w_ih.name, hidden_dim_, state.size());
  const std::size_t steps = x.rows();
  const std::size_t hd = hidden_dim_;
  const Tensor gi = input_projection(x, w_ih, b_ih);
  const Tensor whh_t = transpose(w_hh.value);

  Tensor out = Tensor::matrix(steps, hd);
  if (trace) {
    trace->x = x;
    trace->h = Tensor::matrix(steps + 1, hd);
    trace->r = Tensor::matrix(steps, hd);
    trace->z = Tensor::matrix(steps, hd);
    trace->n = Tensor::matrix(steps, hd);
    trace->hn = Tensor::matrix(steps, hd);
    std::copy(state.begin(), state.end(), trace->h.row(0).begin());
  }
  std::vector<double> gh(3 * hd);
  std::vector<double> h = state;
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy(b_hh.value.storage().begin(), b_hh.value.storage().end(), gh.begin());
    kernels::gemm(h.data(), whh_t.data(), gh.data(), 1, hd, 3 * hd, true);
    const auto git = gi.row(t);
    auto ht = out.row(t);
    for (std::size_t j = 0; j < hd; ++j) {
      const double r = sigmoid(git[j] + gh[j]);
      const double z = sigmoid(git[hd + j] + gh[hd + j]);
      const double hn = gh[2 * hd + j];
      const double n = std::tanh(git[2 * hd + j] + r * hn);
      ht[j] = (1.0 - z) * n + z * h[j];
      if (trace) {
        trace->r.at(t, j) = r;
        trace->z.at(t, j) = z;
        trace->n.at(t, j) = n;
        trace->hn.at(t, j) = hn;
      }
    }
    std::copy(ht.begin(), ht.end(), h.begin());
    if (trace) std::copy(ht.begin(), ht.end(), trace->h.row(t + 1).begin());
  }
  state = std::move(h);
  return out;
}

Tensor GruCell::backward(const Trace& trace, const Tensor& dh, std::vector<double>* dh0) {
  const std::size_t steps = trace.x.rows();
  const std::size_t hd = hidden_dim_;
  if (dh.rows() != steps || dh.cols() != hd) {
    throw DimensionError("gru " + w_ih.name + " backward: dh " + shape_string(dh.shape()) +
                         " for " + std::to_string(steps) + " steps");
  }
  Tensor d_gi = Tensor::matrix(steps, 3 * hd);
  Tensor d_gh = Tensor::matrix(steps, 3 * hd);
  std::vector<double> dh_next(hd, 0.0);
  std::vector<double> dh_prev(hd);
  for (std::size_t t = steps; t-- > 0;) {
    const auto h_prev = trace.h.row(t);
    auto dgi = d_gi.row(t);
    auto dgh = d_gh.row(t);
    for (std::size_t j = 0; j < hd; ++j) {
      const double g = dh.at(t, j) + dh_next[j];
      const double r = trace.r.at(t, j);
      const double z = trace.z.at(t, j);
      const double n = trace.n.at(t, j);
      const double dn_pre = g * (1.0 - z) * (1.0 - n * n);
      const double dz_pre = g * (h_prev[j] - n) * z * (1.0 - z);
      const double dr_pre = dn_pre * trace.hn.at(t, j) * r * (1.0 - r);
      dgi[j] = dr_pre;
      dgi[hd + j] = dz_pre;
      dgi[2 * hd + j] = dn_pre;
      dgh[j] = dr_pre;
      dgh[hd + j] = dz_pre;
      dgh[2 * hd + j] = dn_pre * r;
      dh_prev[j] = g * z;
    }
    kernels::gemm(dgh.data(), w_hh.value.data(), dh_prev.data(), 1, 3 * hd, hd, true);
    dh_next = dh_prev;
  }
  kernels::gemm_tn(d_gh.data(), trace.h.data(), w_hh.grad.data(), steps, 3 * hd, hd, true);
  add_column_sums(d_gh, b_hh.grad);
  kernels::gemm_tn(d_gi.data(), trace.x.data(), w_ih.grad.data(), steps, 3 * hd, input_dim_, true);
  add_column_sums(d_gi, b_ih.grad);
  if (dh0) *dh0 = dh_next;
  Tensor dx = Tensor::matrix(steps, input_dim_);
  kernels::gemm(d_gi.data(), w_ih.value.data(), dx.data(), steps, 3 * hd, input_dim_, false);
  return dx;
}

std::vector<double> GruCell::step(std::span<const double> x, std::span<const double> h_prev) const {
  Tensor xt = Tensor::matrix(1, x.size());
  std::copy(x.begin(), x.end(), xt.storage().begin());
  std::vector<double> h(h_prev.begin(), h_prev.end());
  forward(xt, h, nullptr);
  return h;
}

void GruCell::init(Rng& rng) {
  xavier_uniform(w_ih, rng);
  xavier_uniform(w_hh, rng);
  b_ih.value.fill(0.0);
  b_hh.value.fill(0.0);
}

void GruCell::collect(ParamList& out) {
  out.insert(out.end(), {&w_ih, &w_hh, &b_ih, &b_hh});
}

LstmCell::LstmCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim)
    : w_ih(name + ".w_ih", {4 * hidden_dim, input_dim}),
      w_hh(name + ".w_hh", {4 * hidden_dim, hidden_dim}),
      b_ih(name + ".b_ih", {4 * hidden_dim}),
      b_hh(name + ".b_hh", {4 * hidden_dim}),
      input_dim_(input_dim),
      hidden_dim_(hidden_dim) {}

Tensor LstmCell::forward(const Tensor& x, LstmState& state, Trace* trace) const {
  if (x.cols() != input_dim_) {
    throw DimensionError("lstm " + w_ih.name + ": input " + shape_string(x.shape()) +
                         " does not match weight " + shape_string(w_ih.value.shape()));
  }
  check_state("lstm " + w_ih.name, hidden_dim_, state.h.size());
  check_state("lstm " + w_ih.name, hidden_dim_, state.c.size());
  const std::size_t steps = x.rows();
  const std::size_t hd = hidden_dim_;
  const Tensor gi = input_projection(x, w_ih, b_ih);
  const Tensor whh_t = transpose(w_hh.value);

  Tensor out = Tensor::matrix(steps, hd);
  if (trace) {
    trace->x = x;
    trace->h = Tensor::matrix(steps + 1, hd);
    trace->c = Tensor::matrix(steps + 1, hd);
    for (Tensor* m : {&trace->i, &trace->f, &trace->g, &trace->o, &trace->tanh_c}) {
      *m = Tensor::matrix(steps, hd);
    }
    std::copy(state.h.begin(), state.h.end(), trace->h.row(0).begin());
    std::copy(state.c.begin(), state.c.end(), trace->c.row(0).begin());
  }
  std::vector<double> gh(4 * hd);
  std::vector<double> h = state.h;
  std::vector<double> c = state.c;
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy(b_hh.value.storage().begin(), b_hh.value.storage().end(), gh.begin());
    kernels::gemm(h.data(), whh_t.data(), gh.data(), 1, hd, 4 * hd, true);
    const auto git = gi.row(t);
    auto ht = out.row(t);
    for (std::size_t j = 0; j < hd; ++j) {
      const double ig = sigmoid(git[j] + gh[j]);
      const double fg = sigmoid(git[hd + j] + gh[hd + j]);
      const double gg = std::tanh(git[2 * hd + j] + gh[2 * hd + j]);
      const double og = sigmoid(git[3 * hd + j] + gh[3 * hd + j]);
      c[j] = fg * c[j] + ig * gg;
      const double tc = std::tanh(c[j]);
      ht[j] = og * tc;
      if (trace) {
        trace->i.at(t, j) = ig;
        trace->f.at(t, j) = fg;
        trace->g.at(t, j) = gg;
        trace->o.at(t, j) = og;
        trace->tanh_c.at(t, j) = tc;
      }
    }
    std::copy(ht.begin(), ht.end(), h.begin());
    if (trace) {
      std::copy(h.begin(), h.end(), trace->h.row(t + 1).begin());
      std::copy(c.begin(), c.end(), trace->c.row(t + 1).begin());
    }
  }
  state.h = std::move(h);
  state.c = std::move(c);
  return out;
}

Tensor LstmCell::backward(const Trace& trace, const Tensor& dh, LstmState* dstate0) {
  const std::size_t steps = trace.x.rows();
  const std::size_t hd = hidden_dim_;
  if (dh.rows() != steps || dh.cols() != hd) {
    throw DimensionError("lstm " + w_ih.name + " backward: dh " + shape_string(dh.shape()) +
                         " for " + std::to_string(steps) + " steps");
  }
  Tensor d_gates = Tensor::matrix(steps, 4 * hd);
  std::vector<double> dh_next(hd, 0.0);
  std::vector<double> dc_next(hd, 0.0);
  std::vector<double> dh_prev(hd);
  for (std::size_t t = steps; t-- > 0;) {
    const auto c_prev = trace.c.row(t);
    auto dg = d_gates.row(t);
    for (std::size_t j = 0; j < hd; ++j) {
      const double g_h = dh.at(t, j) + dh_next[j];
      const double ig = trace.i.at(t, j);
      const double fg = trace.f.at(t, j);
      const double gg = trace.g.at(t, j);
      const double og = trace.o.at(t, j);
      const double tc = trace.tanh_c.at(t, j);
      const double dc = dc_next[j] + g_h * og * (1.0 - tc * tc);
      dg[j] = dc * gg * ig * (1.0 - ig);
      dg[hd + j] = dc * c_prev[j] * fg * (1.0 - fg);
      dg[2 * hd + j] = dc * ig * (1.0 - gg * gg);
      dg[3 * hd + j] = g_h * tc * og * (1.0 - og);
      dc_next[j] = dc * fg;
    }
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    kernels::gemm(dg.data(), w_hh.value.data(), dh_prev.data(), 1, 4 * hd, hd, true);
    dh_next = dh_prev;
  }
  kernels::gemm_tn(d_gates.data(), trace.h.data(), w_hh.grad.data(), steps, 4 * hd, hd, true);
  add_column_sums(d_gates, b_hh.grad);
  kernels::gemm_tn(d_gates.data(), trace.x.data(), w_ih.grad.data(), steps, 4 * hd, input_dim_, true);
  add_column_sums(d_gates, b_ih.grad);
  if (dstate0) {
    dstate0->h = dh_next;
    dstate0->c = dc_next;
  }
  Tensor dx = Tensor::matrix(steps, input_dim_);
  kernels::gemm(d_gates.data(), w_ih.value.data(), dx.data(), steps, 4 * hd, input_dim_, false);
  return dx;
}

LstmState LstmCell::step(std::span<const double> x, const LstmState& prev) const {
  Tensor xt = Tensor::matrix(1, x.size());
  std::copy(x.begin(), x.end(), xt.storage().begin());
  LstmState s = prev;
  forward(xt, s, nullptr);
  return s;
}

void LstmCell::init(Rng& rng) {
  xavier_uniform(w_ih, rng);
  xavier_uniform(w_hh, rng);
  b_ih.value.fill(0.0);
  b_hh.value.fill(0.0);
}

void LstmCell::collect(ParamList& out) {
  out.insert(out.end(), {&w_ih, &w_hh, &b_ih, &b_hh});
}

}  // namespace lvtts::nn
