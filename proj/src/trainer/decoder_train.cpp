#include "lvtts/errors.hpp"
#include "lvtts/eval/metrics.hpp"
#include "lvtts/trainer/batching.hpp"
#include "lvtts/trainer/schedule.hpp"
#include "lvtts/trainer/train.hpp"

namespace lvtts::trainer {

namespace {

double scheduled_lr(Schedule s, double base, std::size_t epoch, std::size_t step, std::size_t width,
                    std::size_t warmup) {
  switch (s) {
    case Schedule::Constant: return base;
    case Schedule::Step: return base * step_lr(epoch) / step_lr(0);
    case Schedule::Noam: return noam_lr(step, width, warmup);
  }
  return base;
}

}  // namespace

DecoderTrainResult train_decoder(const decoder::DecoderConfig& model_cfg, const DecoderTrainConfig& cfg,
                                 const features::Corpus& corpus) {
  features::check_provenance(corpus);
  std::vector<Tensor> xs, ys;
  for (const features::Utterance* u : corpus.split(features::Split::Train)) {
    xs.push_back(corpus.linguistic(*u));
    ys.push_back(corpus.normalized_acoustic(*u));
  }
  if (xs.empty()) throw PreconditionError("train_decoder: no training utterances");
  const Tensor x_stream = stack_rows(xs);
  const Tensor y_stream = stack_rows(ys);
  if (x_stream.cols() != model_cfg.in_dim || y_stream.cols() != model_cfg.out_dim) {
    throw ConfigError("decoder dims " + std::to_string(model_cfg.in_dim) + " -> " + std::to_string(model_cfg.out_dim) +
                      " do not match the corpus " + std::to_string(x_stream.cols()) + " -> " +
                      std::to_string(y_stream.cols()));
  }
  const BatchPlan plan = make_batch_plan(x_stream.rows(), cfg.lanes, cfg.window);

  decoder::Decoder model(model_cfg);
  Rng init_rng(mix_seed(cfg.seed, 0));
  model.init(init_rng);
  Rng drop_rng(mix_seed(cfg.seed, 1));
  const nn::ParamList params = model.params();
  OptimizerConfig ocfg;
  ocfg.kind = cfg.optimizer;
  if (cfg.schedule == Schedule::Noam) {
    ocfg.beta2 = 0.98;
    ocfg.eps = 1e-9;
  }
  Optimizer opt(params, ocfg);

  auto valid_mcd = [&](const decoder::Decoder& m) {
    return eval::evaluate_predictions(corpus, features::Split::Valid, [&](const features::Utterance& u) {
             return decoder::predict_features(m, corpus.linguistic(u), true);
           }).total.mcd_db;
  };

  DecoderTrainResult result{model, {}, 0, 0, 0.0};
  {
    // inference-mode loss of the initial weights
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const Tensor y = decoder::predict_features(model, xs[i]);
      for (std::size_t k = 0; k < y.size(); ++k) sum += (y[k] - ys[i][k]) * (y[k] - ys[i][k]);
    }
    result.history.add(0, "train", "loss", sum / static_cast<double>(y_stream.size()));
    result.history.add(0, "valid", "mcd_db", valid_mcd(model));
  }

  EarlyStopper stopper(cfg.patience);
  const double scale = 1.0 / static_cast<double>(cfg.lanes * cfg.window * model_cfg.out_dim);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<decoder::DecoderState> states(cfg.lanes, model.initial_state());
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < plan.batches; ++b) {
      nn::zero_grads(params);
      for (std::size_t lane = 0; lane < cfg.lanes; ++lane) {
        const std::size_t start = plan.start(lane, b);
        decoder::Decoder::Trace trace;
        const Tensor y = model.forward(x_stream.slice_rows(start, start + cfg.window), states[lane], true, drop_rng,
                                       &trace);
        Tensor dy = Tensor::matrix(y.rows(), y.cols());
        for (std::size_t t = 0; t < y.rows(); ++t) {
          const auto target = y_stream.row(start + t);
          for (std::size_t c = 0; c < y.cols(); ++c) {
            const double e = y.at(t, c) - target[c];
            loss_sum += e * e;
            dy.at(t, c) = 2.0 * e * scale;
          }
        }
        model.backward(trace, dy);
      }
      if (cfg.clip > 0.0) nn::clip_grad_norm(params, cfg.clip);
      lr = scheduled_lr(cfg.schedule, cfg.lr, epoch - 1, opt.steps() + 1, model_cfg.embed, cfg.warmup);
      opt.step(lr);
    }
    const double train_loss = loss_sum * scale / static_cast<double>(plan.batches);
    const double mcd = valid_mcd(model);
    result.history.add(epoch, "train", "loss", train_loss);
    result.history.add(epoch, "train", "lr", lr);
    result.history.add(epoch, "valid", "mcd_db", mcd);
    result.epochs_run = epoch;
    const bool stop = stopper.observe(mcd);
    if (stopper.improved()) {
      result.model = model;
      result.best_epoch = epoch;
      result.best_valid_mcd = mcd;
    }
    if (stop) break;
  }
  return result;
}

}  // namespace lvtts::trainer
