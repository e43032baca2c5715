#include "lvtts/vocoder/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lvtts/errors.hpp"
#include "lvtts/nn/activation.hpp"

namespace lvtts::vocoder {

namespace {

Tensor column(std::span<const double> v) { return Tensor({v.size(), 1}, std::vector<double>(v.begin(), v.end())); }

Tensor row(std::span<const double> v) { return Tensor({1, v.size()}, std::vector<double>(v.begin(), v.end())); }

std::size_t gru_params(std::size_t in, std::size_t h) { return 3 * h * in + 3 * h * h + 6 * h; }

int pick_class(std::vector<double> logits, double temperature, Rng& rng) {
  if (temperature <= 0.0) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  for (double& v : logits) v /= temperature;
  nn::softmax_inplace(logits);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    acc += logits[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(logits.size() - 1);
}

}  // namespace

void TierConfig::validate() const {
  if (fs_mid == 0 || fs_top % fs_mid != 0) throw ConfigError("vocoder.fs_top must be a multiple of vocoder.fs_mid");
  if (ratio() < 2) throw ConfigError("vocoder.fs_top / vocoder.fs_mid must be >= 2");
  if (frame_stride % fs_top != 0) {
    throw ConfigError("frame stride " + std::to_string(frame_stride) + " is not a multiple of vocoder.fs_top " +
                      std::to_string(fs_top));
  }
  if (hidden == 0 || cond_dim == 0) throw ConfigError("vocoder.hidden and cond_dim must be positive");
  if (levels < 2) throw ConfigError("vocoder.levels must be >= 2");
}

std::size_t TierConfig::parameter_count() const {
  const std::size_t h = hidden;
  const auto q = static_cast<std::size_t>(levels);
  std::size_t n = 0;
  n += h * fs_top + h;                 // top input
  n += h * cond_dim + h;               // conditioner
  n += 2 * gru_params(h, h);           // top GRUs
  n += h * h * ratio() + h;            // top upsampler
  n += h * fs_mid + h;                 // mid input
  n += 2 * gru_params(h, h);           // mid GRUs
  n += h * h * fs_mid + h;             // mid upsampler
  n += h * (fs_mid + h) + h;           // sample hidden
  n += q * h + q;                      // sample output
  return n;
}

VocoderModel::VocoderModel(const TierConfig& cfg)
    : top_input("top.input", 1, cfg.hidden, cfg.fs_top, cfg.fs_top),
      top_cond("top.cond", cfg.cond_dim, cfg.hidden, 1),
      top_gru1("top.gru1", cfg.hidden, cfg.hidden),
      top_gru2("top.gru2", cfg.hidden, cfg.hidden),
      top_up("top.up", cfg.hidden, cfg.hidden, cfg.fs_top / std::max<std::size_t>(cfg.fs_mid, 1)),
      mid_input("mid.input", 1, cfg.hidden, cfg.fs_mid, cfg.fs_mid),
      mid_gru1("mid.gru1", cfg.hidden, cfg.hidden),
      mid_gru2("mid.gru2", cfg.hidden, cfg.hidden),
      mid_up("mid.up", cfg.hidden, cfg.hidden, cfg.fs_mid),
      sample_hidden("sample.hidden", cfg.fs_mid + cfg.hidden, cfg.hidden),
      sample_out("sample.out", cfg.hidden, static_cast<std::size_t>(cfg.levels)),
      cfg_(cfg) {
  cfg.validate();
}

void VocoderModel::init(Rng& rng) {
  top_input.init(rng);
  top_cond.init(rng);
  top_gru1.init(rng);
  top_gru2.init(rng);
  top_up.init(rng);
  mid_input.init(rng);
  mid_gru1.init(rng);
  mid_gru2.init(rng);
  mid_up.init(rng);
  sample_hidden.init(rng);
  sample_out.init(rng);
}

void VocoderModel::collect(nn::ParamList& out) {
  top_input.collect(out);
  top_cond.collect(out);
  top_gru1.collect(out);
  top_gru2.collect(out);
  top_up.collect(out);
  mid_input.collect(out);
  mid_gru1.collect(out);
  mid_gru2.collect(out);
  mid_up.collect(out);
  sample_hidden.collect(out);
  sample_out.collect(out);
}

nn::ParamList VocoderModel::params() {
  nn::ParamList p;
  collect(p);
  return p;
}

double VocoderModel::silence() const {
  codec::CodecConfig c;
  c.levels = cfg_.levels;
  return codec::dequantize(cfg_.levels / 2, c);
}

VocoderState VocoderModel::initial_state() const {
  const std::vector<double> zero(cfg_.hidden, 0.0);
  return {zero, zero, zero, zero, std::vector<double>(cfg_.fs_top, silence())};
}

Tensor VocoderModel::top_step(std::span<const double> frame, std::span<const double> cond,
                              VocoderState& state) const {
  if (frame.size() != cfg_.fs_top || cond.size() != cfg_.cond_dim) {
    throw DimensionError("top_step: frame of " + std::to_string(frame.size()) + " and cond of " +
                         std::to_string(cond.size()) + ", expected " + std::to_string(cfg_.fs_top) + " and " +
                         std::to_string(cfg_.cond_dim));
  }
  Tensor a = top_input.forward(column(frame));
  a += top_cond.forward(row(cond));
  const Tensor h1 = top_gru1.forward(a, state.top1, nullptr);
  const Tensor h2 = top_gru2.forward(h1, state.top2, nullptr);
  return top_up.forward(h2);
}

Tensor VocoderModel::mid_step(std::span<const double> frame, std::span<const double> top_cond,
                              VocoderState& state) const {
  if (frame.size() != cfg_.fs_mid || top_cond.size() != cfg_.hidden) {
    throw DimensionError("mid_step: frame of " + std::to_string(frame.size()) + " and conditioning of " +
                         std::to_string(top_cond.size()));
  }
  Tensor m = mid_input.forward(column(frame));
  m += row(top_cond);
  const Tensor g1 = mid_gru1.forward(m, state.mid1, nullptr);
  const Tensor g2 = mid_gru2.forward(g1, state.mid2, nullptr);
  return mid_up.forward(g2);
}

std::vector<double> VocoderModel::sample_logits(std::span<const double> prev, std::span<const double> cond) const {
  if (prev.size() != cfg_.fs_mid || cond.size() != cfg_.hidden) {
    throw DimensionError("sample_logits: " + std::to_string(prev.size()) + " samples and conditioning of " +
                         std::to_string(cond.size()));
  }
  Tensor x = Tensor::matrix(1, cfg_.fs_mid + cfg_.hidden);
  std::copy(prev.begin(), prev.end(), x.storage().begin());
  std::copy(cond.begin(), cond.end(), x.storage().begin() + static_cast<std::ptrdiff_t>(cfg_.fs_mid));
  Tensor act = sample_hidden.forward(x);
  for (double& v : act.values()) v = std::tanh(v);
  return sample_out.forward(act).storage();
}

Tensor VocoderModel::forward_window(std::span<const double> inputs, const Tensor& cond, VocoderState& state,
                                    WindowTrace* trace) const {
  const std::size_t fs_top = cfg_.fs_top;
  const std::size_t fs_mid = cfg_.fs_mid;
  const std::size_t hd = cfg_.hidden;
  if (inputs.size() <= fs_top || (inputs.size() - fs_top) % fs_top != 0) {
    throw DimensionError("forward_window: " + std::to_string(inputs.size()) +
                         " inputs is not history plus a positive multiple of " + std::to_string(fs_top));
  }
  const std::size_t len = inputs.size() - fs_top;
  if (cond.rows() != len / fs_top || cond.cols() != cfg_.cond_dim) {
    throw DimensionError("forward_window: conditioning " + shape_string(cond.shape()) + " for " +
                         std::to_string(len / fs_top) + " top steps");
  }

  const Tensor top_x = column(inputs.subspan(0, len));
  Tensor a = top_input.forward(top_x);
  a += top_cond.forward(cond);
  WindowTrace local;
  WindowTrace& tr = trace ? *trace : local;
  const Tensor h1 = top_gru1.forward(a, state.top1, trace ? &tr.top1 : nullptr);
  Tensor h2 = top_gru2.forward(h1, state.top2, trace ? &tr.top2 : nullptr);
  const Tensor up = top_up.forward(h2);

  const Tensor mid_x = column(inputs.subspan(fs_top - fs_mid, len));
  Tensor m = mid_input.forward(mid_x);
  m += up;
  const Tensor g1 = mid_gru1.forward(m, state.mid1, trace ? &tr.mid1 : nullptr);
  Tensor g2 = mid_gru2.forward(g1, state.mid2, trace ? &tr.mid2 : nullptr);
  const Tensor mu = mid_up.forward(g2);

  Tensor sx = Tensor::matrix(len, fs_mid + hd);
  for (std::size_t i = 0; i < len; ++i) {
    auto dst = sx.row(i);
    const auto prev = inputs.subspan(fs_top + i - fs_mid, fs_mid);
    std::copy(prev.begin(), prev.end(), dst.begin());
    const auto c = mu.row(i);
    std::copy(c.begin(), c.end(), dst.begin() + static_cast<std::ptrdiff_t>(fs_mid));
  }
  Tensor act = sample_hidden.forward(sx);
  for (double& v : act.values()) v = std::tanh(v);
  Tensor logits = sample_out.forward(act);

  const auto tail = inputs.subspan(len, fs_top);
  state.history.assign(tail.begin(), tail.end());
  if (trace) {
    tr.top_x = top_x;
    tr.cond = cond;
    tr.top_h2 = std::move(h2);
    tr.mid_x = mid_x;
    tr.mid_h2 = std::move(g2);
    tr.sample_x = std::move(sx);
    tr.act = std::move(act);
  }
  return logits;
}

Tensor VocoderModel::backward_window(const WindowTrace& tr, const Tensor& dlogits, bool need_dcond) {
  const std::size_t fs_mid = cfg_.fs_mid;
  const std::size_t hd = cfg_.hidden;
  Tensor dpre = sample_out.backward(tr.act, dlogits);
  for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] *= 1.0 - tr.act[i] * tr.act[i];
  const Tensor dsx = sample_hidden.backward(tr.sample_x, dpre);
  Tensor dmu = Tensor::matrix(dsx.rows(), hd);
  for (std::size_t i = 0; i < dsx.rows(); ++i) {
    const auto src = dsx.row(i);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(fs_mid), src.end(), dmu.row(i).begin());
  }

  const Tensor dg2 = mid_up.backward(tr.mid_h2, dmu);
  const Tensor dg1 = mid_gru2.backward(tr.mid2, dg2);
  const Tensor dm = mid_gru1.backward(tr.mid1, dg1);
  mid_input.backward(tr.mid_x, dm, false);

  const Tensor dh2 = top_up.backward(tr.top_h2, dm);
  const Tensor dh1 = top_gru2.backward(tr.top2, dh2);
  const Tensor da = top_gru1.backward(tr.top1, dh1);
  top_input.backward(tr.top_x, da, false);
  return top_cond.backward(tr.cond, da, need_dcond);
}

Tensor cond_rows(const Tensor& frames, const TierConfig& cfg, std::size_t start, std::size_t len) {
  const std::size_t steps = len / cfg.fs_top;
  Tensor out = Tensor::matrix(steps, frames.cols());
  for (std::size_t j = 0; j < steps; ++j) {
    const std::size_t f = (start + j * cfg.fs_top) / cfg.frame_stride;
    if (f >= frames.rows()) {
      throw DimensionError("conditioning has " + std::to_string(frames.rows()) + " frames, sample " +
                           std::to_string(start + j * cfg.fs_top) + " needs frame " + std::to_string(f));
    }
    const auto src = frames.row(f);
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  return out;
}

void scatter_cond_grad(const Tensor& drows, const TierConfig& cfg, std::size_t start, Tensor& dframes) {
  for (std::size_t j = 0; j < drows.rows(); ++j) {
    const std::size_t f = (start + j * cfg.fs_top) / cfg.frame_stride;
    kernels::axpy(1.0, drows.row(j).data(), dframes.row(f).data(), drows.cols());
  }
}

namespace {

void check_sequence(const VocoderModel& model, std::size_t n, const codec::CodecConfig& codec) {
  const TierConfig& cfg = model.config();
  if (codec.levels != cfg.levels) throw ConfigError("codec levels do not match vocoder output size");
  if (n < cfg.fs_top) {
    throw DimensionError("sequence of " + std::to_string(n) + " samples is shorter than the top frame " +
                         std::to_string(cfg.fs_top));
  }
  if (n % cfg.fs_top != 0) {
    throw DimensionError("sequence length " + std::to_string(n) + " is not a multiple of " +
                         std::to_string(cfg.fs_top));
  }
}

}  // namespace

NllResult teacher_forced_nll(const VocoderModel& model, std::span<const int> classes, const Tensor& cond,
                             std::size_t window, const codec::CodecConfig& codec) {
  const TierConfig& cfg = model.config();
  check_sequence(model, classes.size(), codec);
  if (window == 0 || window % cfg.fs_top != 0) {
    throw DimensionError("window must be a positive multiple of " + std::to_string(cfg.fs_top));
  }
  VocoderState state = model.initial_state();
  NllResult result;
  std::vector<double> inputs;
  std::vector<std::size_t> targets;
  for (std::size_t start = 0; start < classes.size(); start += window) {
    const std::size_t len = std::min(window, classes.size() - start);
    inputs = state.history;
    targets.clear();
    for (std::size_t i = 0; i < len; ++i) {
      inputs.push_back(codec::dequantize(classes[start + i], codec));
      targets.push_back(static_cast<std::size_t>(classes[start + i]));
    }
    const Tensor logits = model.forward_window(inputs, cond_rows(cond, cfg, start, len), state, nullptr);
    result.sum += nn::softmax_xent_rows(logits, targets, nullptr);
    result.count += len;
  }
  return result;
}

Tensor teacher_forced_logits(const VocoderModel& model, std::span<const int> classes, const Tensor& cond,
                             const codec::CodecConfig& codec) {
  check_sequence(model, classes.size(), codec);
  VocoderState state = model.initial_state();
  std::vector<double> inputs = state.history;
  for (int c : classes) inputs.push_back(codec::dequantize(c, codec));
  return model.forward_window(inputs, cond_rows(cond, model.config(), 0, classes.size()), state, nullptr);
}

Generated generate(const VocoderModel& model, const Tensor& cond, std::size_t n_samples, Rng& rng,
                   double temperature, const codec::CodecConfig& codec) {
  const TierConfig& cfg = model.config();
  if (cond.rows() == 0) throw DimensionError("generate: no conditioning frames");
  if (n_samples > cfg.frame_stride * cond.rows()) {
    throw DimensionError("generate: " + std::to_string(n_samples) + " samples need more than the " +
                         std::to_string(cond.rows()) + " conditioning frames given");
  }
  if (codec.levels != cfg.levels) throw ConfigError("codec levels do not match vocoder output size");

  Generated out;
  VocoderState state = model.initial_state();
  std::vector<double> seq = state.history;  // input values, history first
  auto last = [&](std::size_t k) { return std::span<const double>(seq).subspan(seq.size() - k, k); };
  std::size_t last_frame = cond.rows();
  while (out.classes.size() < n_samples) {
    const std::size_t frame = out.classes.size() / cfg.frame_stride;
    if (frame != last_frame) {
      ++out.counters.cond_frames;
      last_frame = frame;
    }
    const Tensor top = model.top_step(last(cfg.fs_top), cond.row(frame), state);
    ++out.counters.top_steps;
    for (std::size_t q = 0; q < cfg.ratio() && out.classes.size() < n_samples; ++q) {
      const Tensor mid = model.mid_step(last(cfg.fs_mid), top.row(q), state);
      ++out.counters.mid_steps;
      for (std::size_t s = 0; s < cfg.fs_mid && out.classes.size() < n_samples; ++s) {
        const int cls = pick_class(model.sample_logits(last(cfg.fs_mid), mid.row(s)), temperature, rng);
        ++out.counters.sample_steps;
        out.classes.push_back(cls);
        out.samples.push_back(codec::decode(cls, codec));
        seq.push_back(codec::dequantize(cls, codec));
      }
    }
  }
  return out;
}

}  // namespace lvtts::vocoder
