#include "lvtts/vocoder/gradcheck.hpp"

#include <algorithm>

#include "lvtts/codec/mulaw.hpp"
#include "lvtts/nn/activation.hpp"
#include "lvtts/vocoder/model.hpp"

namespace lvtts::vocoder {

nn::LayerCheck check_vocoder(std::uint64_t seed, double eps) {
  Rng rng(seed);
  TierConfig cfg;
  cfg.fs_top = 4;
  cfg.fs_mid = 2;
  cfg.hidden = 3;
  cfg.cond_dim = 2;
  cfg.levels = 8;
  cfg.frame_stride = 8;
  VocoderModel model(cfg);
  const nn::ParamList params = model.params();
  for (nn::Param* p : params) {
    for (double& v : p->value.values()) v = rng.uniform(-0.8, 0.8);
  }
  codec::CodecConfig codec;
  codec.levels = cfg.levels;

  const std::size_t len = 16;
  VocoderState start = model.initial_state();
  for (auto* h : {&start.top1, &start.top2, &start.mid1, &start.mid2}) {
    for (double& v : *h) v = rng.uniform(-0.5, 0.5);
  }
  std::vector<double> inputs = start.history;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < len; ++i) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.levels)));
    inputs.push_back(codec::dequantize(c, codec));
    targets.push_back(static_cast<std::size_t>(c));
  }
  Tensor cond = Tensor::matrix(len / cfg.fs_top, cfg.cond_dim);
  for (double& v : cond.values()) v = rng.uniform(-1.0, 1.0);

  Tensor dcond = Tensor::matrix(cond.rows(), cond.cols());
  auto backprop = [&] {
    nn::zero_grads(params);
    VocoderState s = start;
    VocoderModel::WindowTrace tr;
    const Tensor logits = model.forward_window(inputs, cond, s, &tr);
    Tensor dlogits;
    nn::softmax_xent_rows(logits, targets, &dlogits);
    const Tensor d = model.backward_window(tr, dlogits, true);
    std::copy(d.storage().begin(), d.storage().end(), dcond.storage().begin());
  };
  auto loss = [&] {
    VocoderState s = start;
    return nn::softmax_xent_rows(model.forward_window(inputs, cond, s, nullptr), targets, nullptr);
  };
  std::vector<nn::GradProbe> probes;
  nn::add_param_probes(params, probes);
  probes.push_back({"cond", cond.values(), dcond.values()});
  const nn::GradCheckResult r = nn::gradient_check(backprop, loss, probes, eps);
  return {"vocoder", r.max_relative_error, r.entries};
}

}  // namespace lvtts::vocoder
