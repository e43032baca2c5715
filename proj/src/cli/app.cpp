#include "lvtts/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lvtts/config/config.hpp"
#include "lvtts/decoder/gradcheck.hpp"
#include "lvtts/errors.hpp"
#include "lvtts/eval/metrics.hpp"
#include "lvtts/eval/ransac.hpp"
#include "lvtts/features/acoustic.hpp"
#include "lvtts/features/corpus.hpp"
#include "lvtts/nn/checkpoint.hpp"
#include "lvtts/rng.hpp"
#include "lvtts/vocoder/gradcheck.hpp"

namespace lvtts::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string out = "run";
  std::string corpus;  // defaults to <out>/corpus
  std::string decoder;
  std::string vocoder;
  std::string init;
  std::string mode;
  std::size_t seeds = 10;
  std::vector<std::string> overrides;
};

struct Run {
  config::Config cfg;
  config::ExperimentConfig x;
  fs::path out;

  fs::path checkpoints() const { return out / "checkpoints"; }
  fs::path metrics() const { return out / "metrics"; }
};

Run prepare(const Options& o) {
  Run r;
  if (!o.config_path.empty()) r.cfg.parse_file(o.config_path);
  for (const std::string& s : o.overrides) r.cfg.apply_override(s);
  if (!o.mode.empty()) r.cfg.set("vocoder_train.mode", o.mode);
  config::apply_env(r.cfg);
  r.x = config::typed(r.cfg);
  r.out = o.out;
  fs::create_directories(r.out);
  r.cfg.write_resolved(r.out / "config.resolved");
  return r;
}

fs::path corpus_dir(const Options& o, const Run& r) {
  return o.corpus.empty() ? r.out / "corpus" : fs::path(o.corpus);
}

features::Corpus open_corpus(const Options& o, const Run& r) {
  const fs::path dir = corpus_dir(o, r);
  if (!fs::exists(dir)) throw PreconditionError("no corpus at " + dir.string() + "; run gen-corpus first");
  features::Corpus corpus = features::load_corpus(dir);
  if (corpus.layout.phones != r.x.corpus.phones) {
    throw ConfigError("corpus has " + std::to_string(corpus.layout.phones) + " phones, config says " +
                      std::to_string(r.x.corpus.phones));
  }
  return corpus;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw PreconditionError(what + " checkpoint is required");
  if (!fs::exists(path)) throw PreconditionError(what + " checkpoint " + path + " does not exist");
}

decoder::Decoder load_decoder(const std::string& path, const Run& r) {
  require_file(path, "decoder");
  decoder::Decoder dec(r.x.decoder);
  nn::load_params(path, dec.params());
  return dec;
}

vocoder::VocoderModel load_vocoder(const std::string& path, const Run& r) {
  require_file(path, "vocoder");
  vocoder::VocoderModel voc(r.x.vocoder);
  nn::load_params(path, voc.params());
  return voc;
}

std::string decoder_id(const Run& r) { return decoder::arch_name(r.x.decoder.arch); }

int gen_corpus(const Options& o) {
  Run r = prepare(o);
  const features::Corpus corpus = features::generate_corpus(r.x.corpus);
  const fs::path dir = corpus_dir(o, r);
  features::save_corpus(corpus, dir);
  std::size_t n[3] = {0, 0, 0};
  for (const auto& u : corpus.utterances) ++n[static_cast<int>(u.split)];
  std::cout << "corpus " << dir.string() << ": " << n[0] << " train, " << n[1] << " valid, " << n[2]
            << " test utterances\n";
  return 0;
}

int train_decoder(const Options& o) {
  Run r = prepare(o);
  const features::Corpus corpus = open_corpus(o, r);
  trainer::DecoderTrainResult res = trainer::train_decoder(r.x.decoder, r.x.decoder_train, corpus);
  fs::create_directories(r.checkpoints());
  fs::create_directories(r.metrics());
  const fs::path ckpt = r.checkpoints() / ("decoder_" + decoder_id(r) + ".lvnn");
  nn::save_params(ckpt.string(), res.model.params());
  trainer::write_history_tsv(r.metrics() / ("decoder_" + decoder_id(r) + "_history.tsv"), res.history);
  std::cout << "decoder " << decoder_id(r) << ": " << res.epochs_run << " epochs, best epoch " << res.best_epoch
            << ", valid mcd " << eval::format_real(res.best_valid_mcd) << " dB -> " << ckpt.string() << '\n';
  return 0;
}

int train_vocoder(const Options& o) {
  Run r = prepare(o);
  const trainer::VocoderTrainConfig& vt = r.x.vocoder_train;
  const bool needs_decoder = vt.mode != trainer::CouplingMode::Inv;
  if (needs_decoder && o.decoder.empty()) {
    throw PreconditionError("--mode " + trainer::coupling_name(vt.mode) + " needs --decoder");
  }
  if (vt.mode == trainer::CouplingMode::ImnvPretrained || vt.mode == trainer::CouplingMode::Jmnv) {
    if (o.init.empty()) throw PreconditionError("--mode " + trainer::coupling_name(vt.mode) + " needs --init");
  }
  std::optional<decoder::Decoder> dec;
  if (!o.decoder.empty()) dec.emplace(load_decoder(o.decoder, r));
  std::optional<vocoder::VocoderModel> init;
  if (!o.init.empty()) init.emplace(load_vocoder(o.init, r));
  const features::Corpus corpus = open_corpus(o, r);

  trainer::VocoderTrainResult res = trainer::train_vocoder(r.x.vocoder, vt, corpus, dec ? &*dec : nullptr,
                                                           init ? &*init : nullptr);
  fs::create_directories(r.checkpoints());
  fs::create_directories(r.metrics());
  const std::string mode = trainer::coupling_name(vt.mode);
  const fs::path ckpt = r.checkpoints() / ("vocoder_" + mode + ".lvnn");
  nn::save_params(ckpt.string(), res.model.params());
  if (res.decoder) {
    nn::save_params((r.checkpoints() / ("decoder_" + decoder_id(r) + "_" + mode + ".lvnn")).string(),
                    res.decoder->params());
  }
  trainer::write_history_tsv(r.metrics() / ("vocoder_" + mode + "_history.tsv"), res.history);
  std::cout << "vocoder " << mode << ": valid nll " << eval::format_real(res.history.last("valid", "nll"))
            << " nats/sample -> " << ckpt.string() << '\n';
  return 0;
}

// Generates waveforms for the first validation utterances. Conditioning comes
// from the decoder when one is given, otherwise from the reference features.
int synthesize(const Options& o) {
  Run r = prepare(o);
  std::optional<decoder::Decoder> dec;
  if (!o.decoder.empty()) dec.emplace(load_decoder(o.decoder, r));
  const vocoder::VocoderModel voc = load_vocoder(o.vocoder, r);
  const features::Corpus corpus = open_corpus(o, r);
  const trainer::CouplingMode mode = dec ? trainer::CouplingMode::Imnv : trainer::CouplingMode::Inv;

  const fs::path dir = r.out / "synth";
  fs::create_directories(dir);
  const std::vector<const features::Utterance*> valid = corpus.split(features::Split::Valid);
  const std::size_t n = std::min(r.x.synth_utterances, valid.size());
  Rng rng(mix_seed(r.x.seed, 4));
  for (std::size_t i = 0; i < n; ++i) {
    const features::Utterance& u = *valid[i];
    const Tensor cond = trainer::conditioning(corpus, u, mode, dec ? &*dec : nullptr,
                                              r.x.vocoder_train.mismatched_normalization);
    const vocoder::Generated g = vocoder::generate(voc, cond, cond.rows() * r.x.vocoder.frame_stride, rng,
                                                   r.x.temperature, r.x.codec);
    codec::write_waveform(dir / (u.id + ".lvwv"), {g.samples, corpus.utterances.front().waveform.sample_rate});
    std::cout << u.id << ": " << g.samples.size() << " samples\n";
  }
  return 0;
}

void write_summary(const fs::path& path, const std::vector<std::pair<std::string, eval::MetricsReport>>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "model\tnll\tmcd_db\tf0_rmse_hz\tuv_accuracy_pct\n";
  for (const auto& [id, m] : rows) {
    os << id << '\t' << eval::format_real(m.nll) << '\t' << eval::format_real(m.mcd_db) << '\t'
       << eval::format_real(m.f0_rmse_hz) << '\t' << eval::format_real(m.uv_accuracy_pct) << '\n';
  }
}

// Pooled F0 histogram over the test split; pred maps an utterance to
// denormalized features.
std::vector<std::size_t> test_histogram(const features::Corpus& corpus, const config::ExperimentConfig& x,
                                        const std::function<Tensor(const features::Utterance&)>& frames) {
  std::vector<std::size_t> total(x.hist_bins, 0);
  for (const features::Utterance* u : corpus.split(features::Split::Test)) {
    const Tensor a = frames(*u);
    std::vector<double> lf0(a.rows()), uv(a.rows());
    for (std::size_t t = 0; t < a.rows(); ++t) {
      lf0[t] = a.at(t, features::kLogF0);
      uv[t] = a.at(t, features::kUv);
    }
    uv = features::binarize_uv(uv);
    const auto h = eval::f0_histogram(lf0, uv, x.hist_bins, x.hist_lo_hz, x.hist_hi_hz);
    for (std::size_t b = 0; b < h.size(); ++b) total[b] += h[b];
  }
  return total;
}

int evaluate(const Options& o) {
  Run r = prepare(o);
  const decoder::Decoder dec = load_decoder(o.decoder, r);
  std::optional<vocoder::VocoderModel> voc;
  if (!o.vocoder.empty()) voc.emplace(load_vocoder(o.vocoder, r));
  const features::Corpus corpus = open_corpus(o, r);
  fs::create_directories(r.metrics());
  const std::string id = decoder_id(r);

  const eval::DecoderEvaluation base =
      eval::evaluate_predictions(corpus, features::Split::Test, eval::mean_frame_predictor(corpus));
  eval::DecoderEvaluation ours = eval::evaluate_predictions(
      corpus, features::Split::Test,
      [&](const features::Utterance& u) { return decoder::predict_features(dec, corpus.linguistic(u)); });
  if (voc) {
    ours.total.nll = trainer::vocoder_nll(corpus, features::Split::Test, *voc, r.x.vocoder_train.mode, &dec,
                                          r.x.vocoder_train.eval_window,
                                          r.x.vocoder_train.mismatched_normalization);
  }
  eval::write_metrics_tsv(r.metrics() / "test_mean_frame.tsv", base);
  eval::write_metrics_tsv(r.metrics() / ("test_" + id + ".tsv"), ours);
  write_summary(r.metrics() / ("summary_" + id + ".tsv"), {{"mean_frame", base.total}, {id, ours.total}});

  const auto ref_hist = test_histogram(corpus, r.x, [](const features::Utterance& u) { return u.acoustic; });
  const auto pred_hist = test_histogram(corpus, r.x, [&](const features::Utterance& u) {
    return features::denormalize_acoustic(decoder::predict_features(dec, corpus.linguistic(u)),
                                          corpus.stats.acoustic);
  });
  eval::write_histogram_tsv(r.metrics() / "f0_hist_reference.tsv", ref_hist, r.x.hist_lo_hz, r.x.hist_hi_hz);
  eval::write_histogram_tsv(r.metrics() / ("f0_hist_" + id + ".tsv"), pred_hist, r.x.hist_lo_hz, r.x.hist_hi_hz);

  std::cout << "test " << id << ": mcd " << eval::format_real(ours.total.mcd_db) << " dB (mean frame "
            << eval::format_real(base.total.mcd_db) << "), f0 rmse " << eval::format_real(ours.total.f0_rmse_hz)
            << " Hz, uv " << eval::format_real(ours.total.uv_accuracy_pct) << " %";
  if (voc) std::cout << ", nll " << eval::format_real(ours.total.nll);
  std::cout << '\n';
  return 0;
}

// Decoder weights do not change the counters and barely change the timing, so
// a missing --decoder benchmarks a freshly initialized model.
int benchmark(const Options& o) {
  Run r = prepare(o);
  decoder::Decoder dec(r.x.decoder);
  if (!o.decoder.empty()) {
    dec = load_decoder(o.decoder, r);
  } else {
    Rng rng(mix_seed(r.x.seed, 6));
    dec.init(rng);
  }
  std::optional<vocoder::VocoderModel> voc;
  if (r.x.bench_vocoder) voc.emplace(load_vocoder(o.vocoder, r));
  const std::string id = decoder_id(r);
  const auto points = eval::latency_benchmark(dec, id, r.x.bench, voc ? &*voc : nullptr);
  fs::create_directories(r.metrics());
  eval::write_latency_tsv(r.metrics() / ("latency_" + id + ".tsv"), points);
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(p.duration_s);
    ys.push_back(p.wall_s);
  }
  const eval::RansacFit fit = eval::ransac_fit(xs, ys, 0.0, 200, mix_seed(r.x.seed, 7));
  eval::write_ransac_tsv(r.metrics() / ("ransac_" + id + ".tsv"), fit);
  std::cout << "latency " << id << ": slope " << eval::format_real(fit.line.slope) << " s/s, max latency "
            << eval::format_real(fit.max_latency) << " s, spearman " << eval::format_real(eval::spearman(xs, ys))
            << '\n';
  return 0;
}

int gradcheck(const Options& o) {
  Run r = prepare(o);
  constexpr double kEps = 1e-4;
  constexpr double kTol = 1e-4;
  std::vector<nn::LayerCheck> rows = nn::check_layers(r.x.seed, o.seeds, kEps);
  const auto worst_of = [&](const std::string& name, const std::function<nn::LayerCheck(std::uint64_t)>& f,
                            std::uint64_t salt) {
    nn::LayerCheck w;
    w.layer = name;
    for (std::size_t k = 0; k < o.seeds; ++k) {
      const nn::LayerCheck c = f(mix_seed(r.x.seed, salt + k));
      w.max_relative_error = std::max(w.max_relative_error, c.max_relative_error);
      w.entries += c.entries;
    }
    return w;
  };
  rows.push_back(worst_of("vocoder", [&](std::uint64_t s) { return vocoder::check_vocoder(s, kEps); }, 90000));
  rows.push_back(worst_of(
      "decoder_rnn", [&](std::uint64_t s) { return decoder::check_decoder(decoder::Arch::Rnn, s, kEps); }, 91000));
  rows.push_back(worst_of(
      "decoder_salad", [&](std::uint64_t s) { return decoder::check_decoder(decoder::Arch::Salad, s, kEps); },
      92000));

  fs::create_directories(r.metrics());
  std::ofstream os(r.metrics() / "gradcheck.tsv", std::ios::trunc);
  os << "layer\tmax_relative_error\tentries\tstatus\n";
  bool ok = true;
  for (const nn::LayerCheck& c : rows) {
    const bool pass = c.max_relative_error < kTol;
    ok = ok && pass;
    const std::string status = pass ? "ok" : "FAIL";
    os << c.layer << '\t' << eval::format_real(c.max_relative_error) << '\t' << c.entries << '\t' << status << '\n';
    std::cout << c.layer << '\t' << c.max_relative_error << '\t' << status << '\n';
  }
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"lvtts: desk-scale acoustic decoder and neural vocoder experiments"};
  app.require_subcommand(1);
  Options o;

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Sub subs[] = {
      {"gen-corpus", "generate the synthetic corpus", gen_corpus},
      {"train-decoder", "train the acoustic decoder", train_decoder},
      {"train-vocoder", "train the vocoder", train_vocoder},
      {"synthesize", "generate waveforms for validation utterances", synthesize},
      {"evaluate", "objective metrics on the test split", evaluate},
      {"benchmark", "decoder latency against utterance length", benchmark},
      {"gradcheck", "finite-difference gradient suite", gradcheck},
  };
  int (*chosen)(const Options&) = nullptr;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->allow_extras();
    sub->add_option("--config", o.config_path, "config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--corpus", o.corpus, "corpus directory (default OUT/corpus)");
    const std::string name = s.name;
    if (name == "train-vocoder" || name == "evaluate") sub->add_option("--mode", o.mode, "inv|imnv|imnv_pretrained|jmnv");
    if (name != "gen-corpus" && name != "gradcheck") sub->add_option("--decoder", o.decoder, "decoder checkpoint");
    if (name == "synthesize" || name == "evaluate" || name == "benchmark") {
      sub->add_option("--vocoder", o.vocoder, "vocoder checkpoint");
    }
    if (name == "train-vocoder") sub->add_option("--init", o.init, "vocoder checkpoint to start from");
    if (name == "gradcheck") sub->add_option("--seeds", o.seeds, "seeds per layer")->capture_default_str();
    sub->callback([&chosen, fn = s.fn] { chosen = fn; });
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
    for (const CLI::App* sub : app.get_subcommands()) {
      for (const std::string& extra : sub->remaining()) {
        if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos) {
          throw ConfigError("unexpected argument '" + extra + "'");
        }
        o.overrides.push_back(extra);
      }
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    return chosen(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "missing prerequisite: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace lvtts::cli
