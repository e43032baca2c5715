#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lvtts/errors.hpp"
#include "lvtts/nn/activation.hpp"
#include "lvtts/vocoder/gradcheck.hpp"
#include "lvtts/vocoder/model.hpp"

using namespace lvtts;
using namespace lvtts::vocoder;

namespace {

TierConfig tiny_config() {
  TierConfig cfg;
  cfg.fs_top = 4;
  cfg.fs_mid = 2;
  cfg.hidden = 3;
  cfg.cond_dim = 2;
  cfg.levels = 8;
  cfg.frame_stride = 8;
  return cfg;
}

codec::CodecConfig codec_for(const TierConfig& cfg) {
  codec::CodecConfig c;
  c.levels = cfg.levels;
  return c;
}

void randomize(VocoderModel& model, Rng& rng, double scale) {
  for (nn::Param* p : model.params()) {
    for (double& v : p->value.values()) v = rng.uniform(-scale, scale);
  }
}

std::vector<int> random_classes(std::size_t n, int levels, Rng& rng) {
  std::vector<int> c(n);
  for (int& v : c) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(levels)));
  return c;
}

Tensor random_frames(std::size_t n, std::size_t dim, Rng& rng) {
  Tensor t = Tensor::matrix(n, dim);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Plain loops over the raw weights, sharing nothing with the model code.
struct ScalarVocoder {
  const VocoderModel& m;

  static double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  std::vector<double> gru(const nn::GruCell& g, const std::vector<double>& x, const std::vector<double>& h) const {
    const std::size_t H = h.size();
    std::vector<double> out(H);
    auto gate = [&](std::size_t row, bool hidden) {
      double s = hidden ? g.b_hh.value[row] : g.b_ih.value[row];
      if (hidden) {
        for (std::size_t k = 0; k < H; ++k) s += g.w_hh.value.at(row, k) * h[k];
      } else {
        for (std::size_t k = 0; k < x.size(); ++k) s += g.w_ih.value.at(row, k) * x[k];
      }
      return s;
    };
    for (std::size_t j = 0; j < H; ++j) {
      const double r = sig(gate(j, false) + gate(j, true));
      const double z = sig(gate(H + j, false) + gate(H + j, true));
      const double n = std::tanh(gate(2 * H + j, false) + r * gate(2 * H + j, true));
      out[j] = (1 - z) * n + z * h[j];
    }
    return out;
  }

  // Cross entropy of each position of one sequence of whole top frames.
  std::vector<double> nll(const std::vector<int>& classes, const Tensor& frames) const {
    const TierConfig& c = m.config();
    const codec::CodecConfig cc = codec_for(c);
    const std::size_t H = c.hidden;
    std::vector<double> in(c.fs_top, codec::dequantize(c.levels / 2, cc));
    for (int k : classes) in.push_back(codec::dequantize(k, cc));
    std::vector<double> t1(H, 0.0), t2(H, 0.0), m1(H, 0.0), m2(H, 0.0), losses;
    for (std::size_t top = 0; top * c.fs_top < classes.size(); ++top) {
      const std::size_t base = top * c.fs_top;  // index into `in` of the first history value
      const auto cond = frames.row(base / c.frame_stride);
      std::vector<double> a(H);
      for (std::size_t o = 0; o < H; ++o) {
        double s = m.top_input.bias.value[o] + m.top_cond.bias.value[o];
        for (std::size_t j = 0; j < c.fs_top; ++j) s += m.top_input.weight.value.at(o, 0, j) * in[base + j];
        for (std::size_t i = 0; i < c.cond_dim; ++i) s += m.top_cond.weight.value.at(o, i, 0) * cond[i];
        a[o] = s;
      }
      t1 = gru(m.top_gru1, a, t1);
      t2 = gru(m.top_gru2, t1, t2);
      for (std::size_t q = 0; q < c.ratio(); ++q) {
        const std::size_t mbase = base + c.fs_top - c.fs_mid + q * c.fs_mid;
        std::vector<double> x(H);
        for (std::size_t o = 0; o < H; ++o) {
          double up = m.top_up.bias.value[o];
          for (std::size_t i = 0; i < H; ++i) up += m.top_up.weight.value.at(o, i, q) * t2[i];
          double s = m.mid_input.bias.value[o];
          for (std::size_t j = 0; j < c.fs_mid; ++j) s += m.mid_input.weight.value.at(o, 0, j) * in[mbase + j];
          x[o] = s + up;
        }
        m1 = gru(m.mid_gru1, x, m1);
        m2 = gru(m.mid_gru2, m1, m2);
        for (std::size_t s = 0; s < c.fs_mid; ++s) {
          const std::size_t pos = mbase + c.fs_mid + s;  // index into `in` of the predicted sample
          std::vector<double> feat(in.begin() + static_cast<long>(pos - c.fs_mid), in.begin() + static_cast<long>(pos));
          for (std::size_t o = 0; o < H; ++o) {
            double v = m.mid_up.bias.value[o];
            for (std::size_t i = 0; i < H; ++i) v += m.mid_up.weight.value.at(o, i, s) * m2[i];
            feat.push_back(v);
          }
          std::vector<double> act(H);
          for (std::size_t o = 0; o < H; ++o) {
            double v = m.sample_hidden.bias.value[o];
            for (std::size_t i = 0; i < feat.size(); ++i) v += m.sample_hidden.weight.value.at(o, i) * feat[i];
            act[o] = std::tanh(v);
          }
          std::vector<double> logits(static_cast<std::size_t>(c.levels));
          double mx = -1e300;
          for (std::size_t o = 0; o < logits.size(); ++o) {
            double v = m.sample_out.bias.value[o];
            for (std::size_t i = 0; i < H; ++i) v += m.sample_out.weight.value.at(o, i) * act[i];
            logits[o] = v;
            mx = std::max(mx, v);
          }
          double z = 0.0;
          for (double v : logits) z += std::exp(v - mx);
          losses.push_back(std::log(z) + mx - logits[static_cast<std::size_t>(classes[pos - c.fs_top])]);
        }
      }
    }
    return losses;
  }
};

}  // namespace

TEST_CASE("tier config validation") {
  TierConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.fs_mid = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.fs_mid = 16;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // ratio 1

  TierConfig big;
  big.fs_top = 80;
  big.fs_mid = 16;
  big.hidden = 1024;
  CHECK_NOTHROW(big.validate());
  CHECK(big.ratio() == 5);
}

TEST_CASE("parameter count follows the config") {
  for (const TierConfig& cfg : {TierConfig{}, tiny_config()}) {
    VocoderModel model(cfg);
    CHECK(nn::parameter_count(model.params()) == cfg.parameter_count());
  }
  TierConfig wide;
  wide.fs_top = 80;
  wide.fs_mid = 16;
  wide.hidden = 8;
  VocoderModel model(wide);
  CHECK(nn::parameter_count(model.params()) == wide.parameter_count());
}

TEST_CASE("tier step shapes") {
  SUBCASE("desk config gives 4 mid rows and 4 sample rows") {
    VocoderModel model;
    Rng rng(1);
    model.init(rng);
    VocoderState s = model.initial_state();
    CHECK(s.history.size() == 16);
    const Tensor top = model.top_step(s.history, std::vector<double>(43, 0.1), s);
    CHECK(top.rows() == 4);
    CHECK(top.cols() == 48);
    const Tensor mid = model.mid_step(std::vector<double>(4, 0.0), top.row(0), s);
    CHECK(mid.rows() == 4);
    CHECK(model.sample_logits(std::vector<double>(4, 0.0), mid.row(0)).size() == 256);
  }
  SUBCASE("80/16 frames give 5 conditioning vectors") {
    TierConfig cfg;
    cfg.fs_top = 80;
    cfg.fs_mid = 16;
    cfg.hidden = 8;
    VocoderModel model(cfg);
    VocoderState s = model.initial_state();
    CHECK(model.top_step(s.history, std::vector<double>(43, 0.0), s).rows() == 5);
  }
  SUBCASE("wrong frame size") {
    VocoderModel model;
    VocoderState s = model.initial_state();
    CHECK_THROWS_AS(model.top_step(std::vector<double>(15, 0.0), std::vector<double>(43, 0.0), s), DimensionError);
  }
}

TEST_CASE("zero parameters") {
  VocoderModel model;
  VocoderState s = model.initial_state();
  std::vector<double> frame(16);
  Rng rng(2);
  for (double& v : frame) v = rng.uniform(-1.0, 1.0);
  const Tensor top = model.top_step(frame, std::vector<double>(43, 0.7), s);
  for (double v : top.values()) CHECK(v == 0.0);
  for (double v : s.top1) CHECK(v == 0.0);
  for (double v : s.top2) CHECK(v == 0.0);
  const Tensor mid = model.mid_step(std::vector<double>(4, 0.3), top.row(0), s);
  for (double v : mid.values()) CHECK(v == 0.0);

  const std::vector<int> classes = random_classes(160, 256, rng);
  const Tensor frames = random_frames(2, 43, rng);
  const NllResult r = teacher_forced_nll(model, classes, frames, 80);
  CHECK(r.count == 160);
  CHECK(r.mean() == doctest::Approx(std::log(256.0)).epsilon(1e-14));
}

TEST_CASE("teacher-forced nll matches a scalar re-implementation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    const TierConfig cfg = tiny_config();
    VocoderModel model(cfg);
    randomize(model, rng, 0.9);
    const std::vector<int> classes = random_classes(24, cfg.levels, rng);
    const Tensor frames = random_frames(3, cfg.cond_dim, rng);
    const std::vector<double> expected = ScalarVocoder{model}.nll(classes, frames);
    REQUIRE(expected.size() == 24);

    const Tensor logits = teacher_forced_logits(model, classes, frames, codec_for(cfg));
    for (std::size_t i = 0; i < 24; ++i) {
      const nn::XentResult x = nn::softmax_xent(logits.row(i), static_cast<std::size_t>(classes[i]));
      CHECK(x.loss == doctest::Approx(expected[i]).epsilon(1e-12));
    }
    const double total = std::accumulate(expected.begin(), expected.end(), 0.0);
    CHECK(teacher_forced_nll(model, classes, frames, 8, codec_for(cfg)).sum == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("nll is invariant to window partitioning") {
  Rng rng(7);
  VocoderModel model;
  model.init(rng);
  const std::vector<int> classes = random_classes(480, 256, rng);
  const Tensor frames = random_frames(6, 43, rng);
  const double full = teacher_forced_nll(model, classes, frames, 480).sum;
  for (std::size_t window : {16u, 48u, 80u, 160u, 320u}) {
    CHECK(std::abs(teacher_forced_nll(model, classes, frames, window).sum - full) < 1e-10);
  }
  CHECK_THROWS_AS(teacher_forced_nll(model, classes, frames, 20), DimensionError);
}

TEST_CASE("teacher-forced logits are causal") {
  Rng rng(8);
  const TierConfig cfg = tiny_config();
  VocoderModel model(cfg);
  randomize(model, rng, 0.9);
  const codec::CodecConfig cc = codec_for(cfg);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<int> classes = random_classes(48, cfg.levels, rng);
    const Tensor frames = random_frames(6, cfg.cond_dim, rng);
    const Tensor base = teacher_forced_logits(model, classes, frames, cc);

    const std::size_t p = rng.below(48);
    std::vector<int> changed = classes;
    changed[p] = (changed[p] + 1 + static_cast<int>(rng.below(7))) % cfg.levels;
    const Tensor a = teacher_forced_logits(model, changed, frames, cc);
    for (std::size_t i = 0; i <= p; ++i) {
      for (std::size_t c = 0; c < a.cols(); ++c) CHECK(a.at(i, c) == base.at(i, c));
    }

    const std::size_t k = rng.below(6);
    Tensor other = frames;
    for (double& v : other.row(k)) v += 0.5;
    const Tensor b = teacher_forced_logits(model, classes, other, cc);
    for (std::size_t i = 0; i < k * cfg.frame_stride; ++i) {
      for (std::size_t c = 0; c < b.cols(); ++c) CHECK(b.at(i, c) == base.at(i, c));
    }
    CHECK(max_abs_diff(b, base) > 0.0);
  }
}

TEST_CASE("sequence shorter than the top frame") {
  VocoderModel model;
  const std::vector<int> classes(8, 128);
  CHECK_THROWS_AS(teacher_forced_nll(model, classes, Tensor::matrix(1, 43), 16), DimensionError);
}

TEST_CASE("generation") {
  Rng init(9);
  VocoderModel model;
  model.init(init);
  Rng fr(10);
  const Tensor frames = random_frames(3, 43, fr);

  SUBCASE("hierarchy timing and frame use") {
    Rng rng(1);
    const Generated g = generate(model, frames, 200, rng);
    CHECK(g.samples.size() == 200);
    CHECK(g.counters.top_steps == 13);
    CHECK(g.counters.mid_steps == 50);
    CHECK(g.counters.sample_steps == 200);
    CHECK(g.counters.cond_frames == 3);
    for (double v : g.samples) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  SUBCASE("fixed seed is bit-identical") {
    Rng a(5), b(5);
    CHECK(generate(model, frames, 240, a).samples == generate(model, frames, 240, b).samples);
  }
  SUBCASE("temperature 0 is the argmax path") {
    Rng a(5), b(6);
    const Generated greedy = generate(model, frames, 160, a, 0.0);
    const Generated cold = generate(model, frames, 160, b, 1e-9);
    CHECK(greedy.classes == cold.classes);
    // the greedy classes are the argmax of their own teacher-forced logits
    const Tensor logits = teacher_forced_logits(model, greedy.classes, frames);
    for (std::size_t i = 0; i < 160; ++i) {
      const auto r = logits.row(i);
      CHECK(std::max_element(r.begin(), r.end()) - r.begin() == greedy.classes[i]);
    }
  }
  SUBCASE("preconditions") {
    Rng rng(1);
    CHECK_THROWS_AS(generate(model, Tensor::matrix(0, 43), 10, rng), DimensionError);
    CHECK_THROWS_AS(generate(model, frames, 241, rng), DimensionError);
  }
}

TEST_CASE("composed vocoder gradient over 10 seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const nn::LayerCheck c = check_vocoder(mix_seed(31, seed), 1e-4);
    INFO("seed " << seed);
    CHECK(c.entries > 0);
    CHECK(c.max_relative_error < 1e-4);
  }
}
