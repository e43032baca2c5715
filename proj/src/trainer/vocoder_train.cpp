#include <algorithm>

#include "lvtts/errors.hpp"
#include "lvtts/features/acoustic.hpp"
#include "lvtts/nn/activation.hpp"
#include "lvtts/trainer/batching.hpp"
#include "lvtts/trainer/schedule.hpp"
#include "lvtts/trainer/train.hpp"

namespace lvtts::trainer {

namespace {

struct Item {
  const features::Utterance* utt = nullptr;
  std::vector<int> classes;
  Tensor cond;
};

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

// Scale applied by denormalize_acoustic to each column.
std::vector<double> denorm_scale(const features::MinMaxStats& stats) {
  std::vector<double> s(stats.min.size());
  for (std::size_t c = 0; c < s.size(); ++c) s[c] = stats.max[c] > stats.min[c] ? stats.max[c] - stats.min[c] : 0.0;
  return s;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

}  // namespace

std::vector<int> sample_classes(const features::Utterance& u, const codec::CodecConfig& codec) {
  std::vector<int> out;
  out.reserve(u.waveform.samples.size());
  for (double s : u.waveform.samples) out.push_back(codec::encode(s, codec));
  return out;
}

Tensor conditioning(const features::Corpus& corpus, const features::Utterance& u, CouplingMode mode,
                    const decoder::Decoder* decoder, bool mismatched_normalization) {
  if (mode == CouplingMode::Inv) return corpus.normalized_acoustic(u);
  require(decoder != nullptr, "coupling mode " + coupling_name(mode) + " needs a trained decoder");
  Tensor p = decoder::predict_features(*decoder, corpus.linguistic(u), false);
  if (mismatched_normalization) p = features::denormalize_acoustic(p, corpus.stats.acoustic);
  return p;
}

double vocoder_nll(const features::Corpus& corpus, features::Split split, const vocoder::VocoderModel& model,
                   CouplingMode mode, const decoder::Decoder* decoder, std::size_t window,
                   bool mismatched_normalization) {
  codec::CodecConfig codec;
  codec.levels = model.config().levels;
  vocoder::NllResult total;
  for (const features::Utterance* u : corpus.split(split)) {
    const vocoder::NllResult r = vocoder::teacher_forced_nll(
        model, sample_classes(*u, codec), conditioning(corpus, *u, mode, decoder, mismatched_normalization), window,
        codec);
    total.sum += r.sum;
    total.count += r.count;
  }
  if (total.count == 0) throw PreconditionError("split " + features::split_name(split) + " has no samples");
  return total.mean();
}

VocoderTrainResult train_vocoder(const vocoder::TierConfig& model_cfg, const VocoderTrainConfig& cfg,
                                 const features::Corpus& corpus, const decoder::Decoder* decoder,
                                 const vocoder::VocoderModel* init) {
  const CouplingMode mode = cfg.mode;
  const std::string name = coupling_name(mode);
  if (mode != CouplingMode::Inv) require(decoder != nullptr, name + " training needs a decoder checkpoint");
  if (mode == CouplingMode::ImnvPretrained) require(init != nullptr, name + " training needs an INV vocoder checkpoint");
  if (mode == CouplingMode::Jmnv) require(init != nullptr, name + " training needs an IMNV vocoder checkpoint");
  if (cfg.window == 0 || cfg.window % model_cfg.fs_top != 0) {
    throw ConfigError("vocoder window must be a positive multiple of fs_top");
  }
  if (cfg.lanes == 0) throw ConfigError("vocoder lanes must be positive");
  if (cfg.schedule == Schedule::Noam) throw ConfigError("the noam schedule applies to the decoder only");
  features::check_provenance(corpus);

  VocoderTrainResult result{vocoder::VocoderModel(model_cfg), std::nullopt, {}, 0.0, 0.0};
  vocoder::VocoderModel& model = result.model;
  if (init) {
    if (init->config().parameter_count() != model_cfg.parameter_count() || init->config().fs_top != model_cfg.fs_top ||
        init->config().fs_mid != model_cfg.fs_mid) {
      throw ConfigError("initial vocoder checkpoint does not match the tier config");
    }
    model = *init;
  } else {
    Rng init_rng(mix_seed(cfg.seed, 0));
    model.init(init_rng);
  }
  codec::CodecConfig codec;
  codec.levels = model_cfg.levels;
  const nn::ParamList params = model.params();
  const bool mism = cfg.mismatched_normalization;
  // The joint stage conditions on a decoder that is itself being updated.
  const CouplingMode cond_mode = mode == CouplingMode::ImnvPretrained ? CouplingMode::Imnv : mode;

  if (mode == CouplingMode::Jmnv) {
    decoder::Decoder dec = *decoder;
    const nn::ParamList dparams = dec.params();
    OptimizerConfig ocfg;
    ocfg.kind = cfg.optimizer;
    Optimizer vopt(params, ocfg);
    Optimizer dopt(dparams, ocfg);
    const std::vector<double> scale = denorm_scale(corpus.stats.acoustic);
    const auto train = corpus.split(features::Split::Train);
    std::vector<std::vector<int>> classes;
    for (const features::Utterance* u : train) classes.push_back(sample_classes(*u, codec));

    result.train_nll_before = vocoder_nll(corpus, features::Split::Train, model, cond_mode, &dec, cfg.eval_window, mism);
    result.history.add(0, "train", "nll", result.train_nll_before);
    result.history.add(0, "valid", "nll", vocoder_nll(corpus, features::Split::Valid, model, cond_mode, &dec,
                                                      cfg.eval_window, mism));
    Rng unused(0);
    for (std::size_t epoch = 1; epoch <= cfg.joint_epochs; ++epoch) {
      Rng order_rng(mix_seed(cfg.seed, 1000 + epoch));
      double loss_sum = 0.0;
      std::size_t count = 0;
      for (std::size_t k : shuffled(train.size(), order_rng)) {
        const features::Utterance& u = *train[k];
        const std::vector<int>& cls = classes[k];
        nn::zero_grads(params);
        nn::zero_grads(dparams);
        decoder::Decoder::Trace dtrace;
        decoder::DecoderState dstate = dec.initial_state();
        Tensor cond = dec.forward(corpus.linguistic(u), dstate, false, unused, &dtrace);
        if (mism) cond = features::denormalize_acoustic(cond, corpus.stats.acoustic);

        Tensor dcond = Tensor::matrix(cond.rows(), cond.cols());
        vocoder::VocoderState state = model.initial_state();
        const double inv_len = 1.0 / static_cast<double>(cls.size());
        std::vector<double> inputs;
        std::vector<std::size_t> targets;
        for (std::size_t start = 0; start < cls.size(); start += cfg.window) {
          const std::size_t len = std::min(cfg.window, cls.size() - start);
          inputs = state.history;
          targets.clear();
          for (std::size_t i = 0; i < len; ++i) {
            inputs.push_back(codec::dequantize(cls[start + i], codec));
            targets.push_back(static_cast<std::size_t>(cls[start + i]));
          }
          vocoder::VocoderModel::WindowTrace trace;
          const Tensor logits =
              model.forward_window(inputs, vocoder::cond_rows(cond, model_cfg, start, len), state, &trace);
          Tensor dlogits;
          loss_sum += nn::softmax_xent_rows(logits, targets, &dlogits, inv_len);
          count += len;
          vocoder::scatter_cond_grad(model.backward_window(trace, dlogits, true), model_cfg, start, dcond);
        }
        if (mism) {
          for (std::size_t t = 0; t < dcond.rows(); ++t) {
            for (std::size_t c = 0; c < dcond.cols(); ++c) dcond.at(t, c) *= scale[c];
          }
        }
        dec.backward(dtrace, dcond);
        if (cfg.clip > 0.0) {
          nn::clip_grad_norm(params, cfg.clip);
          nn::clip_grad_norm(dparams, cfg.clip);
        }
        vopt.step(cfg.joint_lr);
        dopt.step(cfg.joint_decoder_lr);
      }
      result.history.add(epoch, "train", "running_nll", loss_sum / static_cast<double>(count));
      result.history.add(epoch, "valid", "nll", vocoder_nll(corpus, features::Split::Valid, model, cond_mode, &dec,
                                                            cfg.eval_window, mism));
    }
    result.train_nll_after = vocoder_nll(corpus, features::Split::Train, model, cond_mode, &dec, cfg.eval_window, mism);
    result.history.add(cfg.joint_epochs, "train", "nll", result.train_nll_after);
    result.decoder = std::move(dec);
    return result;
  }

  std::vector<Item> items;
  for (const features::Utterance* u : corpus.split(features::Split::Train)) {
    items.push_back({u, sample_classes(*u, codec), conditioning(corpus, *u, cond_mode, decoder, mism)});
  }
  if (items.empty()) throw PreconditionError("train_vocoder: no training utterances");

  OptimizerConfig ocfg;
  ocfg.kind = cfg.optimizer;
  Optimizer opt(params, ocfg);
  auto valid_nll = [&] {
    return vocoder_nll(corpus, features::Split::Valid, model, cond_mode, decoder, cfg.eval_window, mism);
  };
  result.history.add(0, "valid", "nll", valid_nll());

  struct Lane {
    std::vector<std::size_t> queue;
    std::size_t next = 0;  // position in queue
    std::size_t pos = 0;   // sample position in the current utterance
    vocoder::VocoderState state;
  };
  EarlyStopper stopper(cfg.patience);
  vocoder::VocoderModel best = model;
  const double scale = 1.0 / static_cast<double>(cfg.lanes * cfg.window);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng order_rng(mix_seed(cfg.seed, epoch));
    const std::vector<std::size_t> order = shuffled(items.size(), order_rng);
    std::vector<Lane> lanes(cfg.lanes);
    for (std::size_t i = 0; i < order.size(); ++i) lanes[i % cfg.lanes].queue.push_back(order[i]);
    for (Lane& l : lanes) l.state = model.initial_state();

    double loss_sum = 0.0;
    std::size_t count = 0;
    const double lr = cfg.schedule == Schedule::Step ? cfg.lr * step_lr(epoch - 1) / step_lr(0) : cfg.lr;
    std::vector<double> inputs;
    std::vector<std::size_t> targets;
    for (;;) {
      bool active = false;
      nn::zero_grads(params);
      for (Lane& l : lanes) {
        if (l.next >= l.queue.size()) continue;
        active = true;
        const Item& it = items[l.queue[l.next]];
        const std::size_t len = std::min(cfg.window, it.classes.size() - l.pos);
        inputs = l.state.history;
        targets.clear();
        for (std::size_t i = 0; i < len; ++i) {
          inputs.push_back(codec::dequantize(it.classes[l.pos + i], codec));
          targets.push_back(static_cast<std::size_t>(it.classes[l.pos + i]));
        }
        vocoder::VocoderModel::WindowTrace trace;
        const Tensor logits =
            model.forward_window(inputs, vocoder::cond_rows(it.cond, model_cfg, l.pos, len), l.state, &trace);
        Tensor dlogits;
        loss_sum += nn::softmax_xent_rows(logits, targets, &dlogits, scale);
        count += len;
        model.backward_window(trace, dlogits, false);
        l.pos += len;
        if (l.pos >= it.classes.size()) {
          l.pos = 0;
          ++l.next;
          l.state = model.initial_state();
        }
      }
      if (!active) break;
      if (cfg.clip > 0.0) nn::clip_grad_norm(params, cfg.clip);
      opt.step(lr);
    }
    const double v = valid_nll();
    result.history.add(epoch, "train", "running_nll", loss_sum / static_cast<double>(count));
    result.history.add(epoch, "train", "lr", lr);
    result.history.add(epoch, "valid", "nll", v);
    const bool stop = stopper.observe(v);
    if (stopper.improved()) best = model;
    if (stop) break;
  }
  model = std::move(best);
  return result;
}

}  // namespace lvtts::trainer
