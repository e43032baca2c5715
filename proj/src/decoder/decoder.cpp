#include "lvtts/decoder/decoder.hpp"

#include <cmath>

#include "lvtts/errors.hpp"
#include "lvtts/features/acoustic.hpp"
#include "lvtts/nn/activation.hpp"

namespace lvtts::decoder {

Arch parse_arch(const std::string& name) {
  if (name == "rnn") return Arch::Rnn;
  if (name == "salad") return Arch::Salad;
  throw ConfigError("unknown decoder arch '" + name + "' (expected rnn or salad)");
}

std::string arch_name(Arch arch) { return arch == Arch::Rnn ? "rnn" : "salad"; }

void DecoderConfig::validate() const {
  if (in_dim == 0 || embed == 0 || out_dim == 0) throw ConfigError("decoder dimensions must be positive");
  auto rate_ok = [](double p) { return p >= 0.0 && p < 1.0; };
  if (!rate_ok(attn_dropout) || !rate_ok(ffn_dropout) || !rate_ok(pos_dropout) || !rate_ok(rnn_dropout)) {
    throw ConfigError("dropout rates must lie in [0, 1)");
  }
  if (arch == Arch::Rnn && hidden == 0) throw ConfigError("decoder.hidden must be positive");
  if (arch == Arch::Salad) {
    if (embed % 2 != 0) throw ConfigError("decoder.embed must be even for positional codes");
    if (heads == 0 || embed % heads != 0) throw ConfigError("decoder.embed must be divisible by decoder.heads");
    if (d_ff == 0) throw ConfigError("decoder.d_ff must be positive");
  }
}

std::vector<double> positional_code(std::size_t t, std::size_t width) {
  if (width % 2 != 0) throw DimensionError("positional code width must be even, got " + std::to_string(width));
  std::vector<double> c(width);
  for (std::size_t i = 0; i < width / 2; ++i) {
    const double angle = static_cast<double>(t) / std::pow(10000.0, 2.0 * i / static_cast<double>(width));
    c[2 * i] = std::sin(angle);
    c[2 * i + 1] = std::cos(angle);
  }
  return c;
}

Decoder::Decoder(const DecoderConfig& cfg) : embed("embed", cfg.in_dim, cfg.embed), cfg_(cfg) {
  cfg.validate();
  if (cfg.arch == Arch::Rnn) {
    lstm1 = nn::LstmCell("rnn.lstm1", cfg.embed, cfg.hidden);
    lstm2 = nn::LstmCell("rnn.lstm2", cfg.hidden, cfg.out_dim);
  } else {
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
      const std::string p = "block" + std::to_string(b) + ".";
      blocks.push_back({nn::LayerNorm(p + "norm1", cfg.embed), nn::LayerNorm(p + "norm2", cfg.embed),
                        nn::MultiHeadAttention(p + "attn", cfg.embed, cfg.heads),
                        nn::FeedForward(p + "ffn", cfg.embed, cfg.d_ff)});
    }
    out = nn::Linear("out", cfg.embed, cfg.out_dim);
  }
}

void Decoder::init(Rng& rng) {
  embed.init(rng);
  if (cfg_.arch == Arch::Rnn) {
    lstm1.init(rng);
    lstm2.init(rng);
    return;
  }
  for (Block& b : blocks) {
    b.attn.init(rng);
    b.ffn.init(rng);
  }
  out.init(rng);
}

void Decoder::collect(nn::ParamList& list) {
  embed.collect(list);
  if (cfg_.arch == Arch::Rnn) {
    lstm1.collect(list);
    lstm2.collect(list);
    return;
  }
  for (Block& b : blocks) {
    b.norm1.collect(list);
    b.attn.collect(list);
    b.norm2.collect(list);
    b.ffn.collect(list);
  }
  out.collect(list);
}

nn::ParamList Decoder::params() {
  nn::ParamList p;
  collect(p);
  return p;
}

DecoderState Decoder::initial_state() const {
  DecoderState s;
  if (cfg_.arch == Arch::Rnn) {
    s.hidden = lstm1.zero_state();
    s.output = lstm2.zero_state();
  }
  return s;
}

Tensor Decoder::forward(const Tensor& x, DecoderState& state, bool train, Rng& rng, Trace* trace) const {
  if (x.cols() != cfg_.in_dim) {
    throw DimensionError("decoder input " + shape_string(x.shape()) + ", expected " + std::to_string(cfg_.in_dim) +
                         " columns");
  }
  Tensor pre = embed.forward(x);
  Tensor h = nn::relu(pre);
  if (trace) {
    trace->x = x;
    trace->pre = std::move(pre);
  }
  return cfg_.arch == Arch::Rnn ? forward_rnn(h, state, train, rng, trace)
                                : forward_salad(h, state, train, rng, trace);
}

Tensor Decoder::forward_rnn(const Tensor& h, DecoderState& state, bool train, Rng& rng, Trace* trace) const {
  const Tensor a = lstm1.forward(h, state.hidden, trace ? &trace->lstm1 : nullptr);
  const Tensor d = nn::dropout_forward(a, {cfg_.rnn_dropout, train}, rng, trace ? &trace->drop_mask : nullptr);
  Tensor y = lstm2.forward(d, state.output, trace ? &trace->lstm2 : nullptr);
  counters_.sequential_steps += h.rows();
  return y;
}

Tensor Decoder::forward_salad(const Tensor& h, DecoderState& state, bool train, Rng& rng, Trace* trace) const {
  Tensor x = h;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const std::vector<double> c = positional_code(state.offset + t, cfg_.embed);
    kernels::axpy(1.0, c.data(), x.row(t).data(), c.size());
  }
  x = nn::dropout_forward(x, {cfg_.pos_dropout, train}, rng, trace ? &trace->pos_mask : nullptr);
  if (trace) trace->blocks.assign(blocks.size(), {});
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& blk = blocks[b];
    BlockTrace* bt = trace ? &trace->blocks[b] : nullptr;
    const Tensor n1 = blk.norm1.forward(x);
    const Tensor att = blk.attn.forward(n1, {cfg_.attn_dropout, train}, rng, bt ? &bt->attn : nullptr);
    Tensor mid = x + nn::dropout_forward(att, {cfg_.attn_dropout, train}, rng, bt ? &bt->attn_mask : nullptr);
    const Tensor n2 = blk.norm2.forward(mid);
    const Tensor ff = blk.ffn.forward(n2, bt ? &bt->ffn : nullptr);
    Tensor next = mid + nn::dropout_forward(ff, {cfg_.ffn_dropout, train}, rng, bt ? &bt->ffn_mask : nullptr);
    if (bt) {
      bt->x = std::move(x);
      bt->mid = std::move(mid);
    }
    x = std::move(next);
  }
  Tensor y = out.forward(x);
  if (trace) trace->top = std::move(x);
  state.offset += h.rows();
  counters_.passes += 1;
  return y;
}

Tensor Decoder::backward(const Trace& tr, const Tensor& dy) {
  Tensor dh;
  if (cfg_.arch == Arch::Rnn) {
    const Tensor dd = lstm2.backward(tr.lstm2, dy);
    dh = lstm1.backward(tr.lstm1, nn::dropout_backward(dd, tr.drop_mask));
  } else {
    Tensor dx = out.backward(tr.top, dy);
    for (std::size_t b = blocks.size(); b-- > 0;) {
      Block& blk = blocks[b];
      const BlockTrace& bt = tr.blocks[b];
      // next = mid + drop(ffn(norm2(mid)))
      const Tensor dff = blk.ffn.backward(bt.ffn, nn::dropout_backward(dx, bt.ffn_mask));
      Tensor dmid = dx;
      dmid += blk.norm2.backward(bt.mid, dff);
      // mid = x + drop(attn(norm1(x)))
      const Tensor datt = blk.attn.backward(bt.attn, nn::dropout_backward(dmid, bt.attn_mask));
      dx = dmid;
      dx += blk.norm1.backward(bt.x, datt);
    }
    dh = nn::dropout_backward(dx, tr.pos_mask);
  }
  return embed.backward(tr.x, nn::relu_backward(tr.pre, dh));
}

Tensor predict_features(const Decoder& decoder, const Tensor& linguistic, bool binarize_uv) {
  DecoderState state = decoder.initial_state();
  Rng unused(0);
  Tensor y = decoder.forward(linguistic, state, false, unused, nullptr);
  if (binarize_uv && y.cols() > features::kUv) {
    for (std::size_t t = 0; t < y.rows(); ++t) y.at(t, features::kUv) = y.at(t, features::kUv) >= 0.5 ? 1.0 : 0.0;
  }
  return y;
}

}  // namespace lvtts::decoder
