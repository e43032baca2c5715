#include "lvtts/decoder/gradcheck.hpp"

#include <algorithm>

namespace lvtts::decoder {

nn::LayerCheck check_decoder(Arch arch, std::uint64_t seed, double eps) {
  Rng rng(seed);
  DecoderConfig cfg;
  cfg.arch = arch;
  cfg.in_dim = 5;
  cfg.embed = 4;
  cfg.hidden = 3;
  cfg.blocks = 2;
  cfg.heads = 2;
  cfg.d_ff = 6;
  cfg.out_dim = 3;
  cfg.attn_dropout = 0.2;
  cfg.ffn_dropout = 0.2;
  cfg.pos_dropout = 0.2;
  cfg.rnn_dropout = 0.2;
  Decoder model(cfg);
  const nn::ParamList params = model.params();
  for (nn::Param* p : params) {
    for (double& v : p->value.values()) v = rng.uniform(-0.8, 0.8);
  }
  Tensor x = Tensor::matrix(6, cfg.in_dim);
  for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
  Tensor w = Tensor::matrix(6, cfg.out_dim);
  for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
  const std::uint64_t drop_seed = rng.below(1u << 30);
  DecoderState start = model.initial_state();
  start.offset = 3;

  auto run = [&](Decoder::Trace* tr) {
    DecoderState s = start;
    Rng drop(drop_seed);
    return model.forward(x, s, true, drop, tr);
  };
  Tensor dx = Tensor::matrix(x.rows(), x.cols());
  auto backprop = [&] {
    nn::zero_grads(params);
    Decoder::Trace tr;
    run(&tr);
    const Tensor d = model.backward(tr, w);
    std::copy(d.storage().begin(), d.storage().end(), dx.storage().begin());
  };
  auto loss = [&] {
    const Tensor y = run(nullptr);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
    return s;
  };
  std::vector<nn::GradProbe> probes;
  nn::add_param_probes(params, probes);
  probes.push_back({"x", x.values(), dx.values()});
  const nn::GradCheckResult r = nn::gradient_check(backprop, loss, probes, eps);
  return {"decoder." + arch_name(arch), r.max_relative_error, r.entries};
}

}  // namespace lvtts::decoder
