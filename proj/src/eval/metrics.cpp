#include "lvtts/eval/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lvtts/errors.hpp"
#include "lvtts/features/acoustic.hpp"

namespace lvtts::eval {

namespace {

void same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a) + " and " + std::to_string(b) +
                         " differ");
  }
}

std::vector<double> column(const Tensor& m, std::size_t c) {
  std::vector<double> out(m.rows());
  for (std::size_t t = 0; t < m.rows(); ++t) out[t] = m.at(t, c);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mcd_frame(std::span<const double> ref, std::span<const double> pred) {
  if (ref.size() < features::kCepstra || pred.size() < features::kCepstra) {
    throw DimensionError("mcd: frames need " + std::to_string(features::kCepstra) + " cepstral values");
  }
  double s = 0.0;
  for (std::size_t d = 1; d < features::kCepstra; ++d) {
    const double e = ref[d] - pred[d];
    s += e * e;
  }
  return 10.0 / std::log(10.0) * std::sqrt(2.0 * s);
}

double mcd(const Tensor& ref, const Tensor& pred) {
  same_length(ref.rows(), pred.rows(), "mcd");
  if (ref.rows() == 0) throw DimensionError("mcd: empty sequences");
  double sum = 0.0;
  for (std::size_t t = 0; t < ref.rows(); ++t) sum += mcd_frame(ref.row(t), pred.row(t));
  return sum / static_cast<double>(ref.rows());
}

double f0_rmse(std::span<const double> ref_log_f0, std::span<const double> pred_log_f0,
               std::span<const double> uv_ref) {
  same_length(ref_log_f0.size(), pred_log_f0.size(), "f0_rmse");
  same_length(ref_log_f0.size(), uv_ref.size(), "f0_rmse");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < ref_log_f0.size(); ++t) {
    if (uv_ref[t] < 0.5) continue;
    const double e = std::exp(ref_log_f0[t]) - std::exp(pred_log_f0[t]);
    s += e * e;
    ++n;
  }
  if (n == 0) throw DomainError("f0_rmse: reference has no voiced frames");
  return std::sqrt(s / static_cast<double>(n));
}

double uv_accuracy(std::span<const double> ref, std::span<const double> pred) {
  same_length(ref.size(), pred.size(), "uv_accuracy");
  if (ref.empty()) throw DimensionError("uv_accuracy: empty sequences");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    for (double v : {ref[t], pred[t]}) {
      if (v != 0.0 && v != 1.0) throw DomainError("uv_accuracy: flag " + std::to_string(v) + " is not 0 or 1");
    }
    hits += ref[t] == pred[t];
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ref.size());
}

std::vector<std::size_t> f0_histogram(std::span<const double> log_f0, std::span<const double> uv,
                                      std::size_t bins, double lo_hz, double hi_hz) {
  if (bins == 0) throw DomainError("f0_histogram: bins must be >= 1");
  if (!(hi_hz > lo_hz)) throw DomainError("f0_histogram: empty range");
  same_length(log_f0.size(), uv.size(), "f0_histogram");
  std::vector<std::size_t> counts(bins, 0);
  const double width = (hi_hz - lo_hz) / static_cast<double>(bins);
  for (std::size_t t = 0; t < log_f0.size(); ++t) {
    if (uv[t] < 0.5) continue;
    const double hz = std::exp(log_f0[t]);
    if (hz < lo_hz || hz > hi_hz) continue;
    const auto b = std::min(bins - 1, static_cast<std::size_t>((hz - lo_hz) / width));
    ++counts[b];
  }
  return counts;
}

DecoderEvaluation evaluate_predictions(const features::Corpus& corpus, features::Split split,
                                       const Predictor& predict) {
  using features::kLogF0;
  using features::kUv;
  DecoderEvaluation out;
  double mcd_sum = 0.0, f0_sq = 0.0;
  std::size_t frames = 0, voiced = 0, hits = 0;
  for (const features::Utterance* u : corpus.split(split)) {
    Tensor pred = predict(*u);
    same_length(u->frames(), pred.rows(), "prediction");
    pred = features::denormalize_acoustic(pred, corpus.stats.acoustic);
    const std::vector<double> uv = features::binarize_uv(column(pred, kUv));
    for (std::size_t t = 0; t < pred.rows(); ++t) pred.at(t, kUv) = uv[t];

    const Tensor& ref = u->acoustic;
    const std::vector<double> ref_f0 = column(ref, kLogF0), pred_f0 = column(pred, kLogF0);
    const std::vector<double> ref_uv = column(ref, kUv);
    UtteranceMetrics m;
    m.id = u->id;
    m.frames = ref.rows();
    m.mcd_db = mcd(ref, pred);
    m.uv_accuracy_pct = uv_accuracy(ref_uv, uv);
    m.f0_rmse_hz = std::nan("");
    std::size_t nv = 0;
    for (double v : ref_uv) nv += v >= 0.5;
    if (nv > 0) m.f0_rmse_hz = f0_rmse(ref_f0, pred_f0, ref_uv);

    mcd_sum += m.mcd_db * static_cast<double>(m.frames);
    frames += m.frames;
    for (std::size_t t = 0; t < ref.rows(); ++t) {
      hits += ref_uv[t] == uv[t];
      if (ref_uv[t] >= 0.5) {
        const double e = std::exp(ref_f0[t]) - std::exp(pred_f0[t]);
        f0_sq += e * e;
        ++voiced;
      }
    }
    out.utterances.push_back(std::move(m));
  }
  if (frames == 0) throw PreconditionError("split " + features::split_name(split) + " has no frames");
  out.total.mcd_db = mcd_sum / static_cast<double>(frames);
  out.total.uv_accuracy_pct = 100.0 * static_cast<double>(hits) / static_cast<double>(frames);
  out.total.f0_rmse_hz = voiced ? std::sqrt(f0_sq / static_cast<double>(voiced)) : std::nan("");
  return out;
}

Tensor mean_frame(const features::Corpus& corpus) {
  Tensor mean = Tensor::matrix(1, features::kAcousticDim);
  std::size_t n = 0;
  for (const features::Utterance* u : corpus.split(features::Split::Train)) {
    const Tensor f = corpus.normalized_acoustic(*u);
    for (std::size_t t = 0; t < f.rows(); ++t) kernels::axpy(1.0, f.row(t).data(), mean.data(), f.cols());
    n += f.rows();
  }
  if (n == 0) throw PreconditionError("mean_frame: no training frames");
  mean *= 1.0 / static_cast<double>(n);
  return mean;
}

Predictor mean_frame_predictor(const features::Corpus& corpus) {
  const Tensor mean = mean_frame(corpus);
  return [mean](const features::Utterance& u) {
    Tensor out = Tensor::matrix(u.frames(), mean.cols());
    for (std::size_t t = 0; t < u.frames(); ++t) std::copy(mean.storage().begin(), mean.storage().end(), out.row(t).begin());
    return out;
  };
}

void write_metrics_tsv(const std::filesystem::path& path, const DecoderEvaluation& eval) {
  std::ofstream os = open_out(path);
  os << "id\tframes\tmcd_db\tf0_rmse_hz\tuv_accuracy_pct\n";
  std::size_t frames = 0;
  for (const UtteranceMetrics& m : eval.utterances) {
    os << m.id << '\t' << m.frames << '\t' << format_real(m.mcd_db) << '\t' << format_real(m.f0_rmse_hz) << '\t'
       << format_real(m.uv_accuracy_pct) << '\n';
    frames += m.frames;
  }
  os << "ALL\t" << frames << '\t' << format_real(eval.total.mcd_db) << '\t' << format_real(eval.total.f0_rmse_hz)
     << '\t' << format_real(eval.total.uv_accuracy_pct) << '\n';
}

void write_histogram_tsv(const std::filesystem::path& path, const std::vector<std::size_t>& counts, double lo_hz,
                         double hi_hz) {
  std::ofstream os = open_out(path);
  os << "bin\tlo_hz\thi_hz\tcount\n";
  const double width = (hi_hz - lo_hz) / static_cast<double>(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    os << b << '\t' << format_real(lo_hz + width * static_cast<double>(b)) << '\t'
       << format_real(lo_hz + width * static_cast<double>(b + 1)) << '\t' << counts[b] << '\n';
  }
}

}  // namespace lvtts::eval
