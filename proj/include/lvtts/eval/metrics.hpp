#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lvtts/features/corpus.hpp"

namespace lvtts::eval {

// (10 / ln 10) * sqrt(2 * sum_{d=1..39} (a_d - b_d)^2); c0 is left out.
double mcd_frame(std::span<const double> ref, std::span<const double> pred);
// Mean of mcd_frame over rows. Inputs are denormalized frames with at least
// 40 cepstral columns.
double mcd(const Tensor& ref, const Tensor& pred);

// RMSE in Hz of exp(log F0) over frames voiced in the reference.
double f0_rmse(std::span<const double> ref_log_f0, std::span<const double> pred_log_f0,
               std::span<const double> uv_ref);

// Percentage of matching 0/1 flags.
double uv_accuracy(std::span<const double> ref, std::span<const double> pred);

// Voiced F0 values binned uniformly over [lo_hz, hi_hz]; hi_hz falls in the
// last bin and values outside the range are skipped.
std::vector<std::size_t> f0_histogram(std::span<const double> log_f0, std::span<const double> uv,
                                      std::size_t bins, double lo_hz, double hi_hz);

struct MetricsReport {
  double nll = 0.0;  // nats/sample, 0 when not measured
  double mcd_db = 0.0;
  double f0_rmse_hz = 0.0;
  double uv_accuracy_pct = 0.0;
};

struct UtteranceMetrics {
  std::string id;
  std::size_t frames = 0;
  double mcd_db = 0.0;
  double f0_rmse_hz = 0.0;  // NaN without voiced reference frames
  double uv_accuracy_pct = 0.0;
};

struct DecoderEvaluation {
  std::vector<UtteranceMetrics> utterances;
  // Pooled over every frame of the split.
  MetricsReport total;
};

// `predict` maps an utterance to normalized (frames x 43) predictions; UV is
// binarized here before scoring.
using Predictor = std::function<Tensor(const features::Utterance&)>;
DecoderEvaluation evaluate_predictions(const features::Corpus& corpus, features::Split split,
                                       const Predictor& predict);

// Mean normalized training frame, the trivial baseline.
Tensor mean_frame(const features::Corpus& corpus);
Predictor mean_frame_predictor(const features::Corpus& corpus);

// Columns: id, frames, mcd_db, f0_rmse_hz, uv_accuracy_pct; a final "ALL" row.
void write_metrics_tsv(const std::filesystem::path& path, const DecoderEvaluation& eval);
// Columns: bin, lo_hz, hi_hz, count.
void write_histogram_tsv(const std::filesystem::path& path, const std::vector<std::size_t>& counts, double lo_hz,
                         double hi_hz);

// %.17g, so values survive a text round trip.
std::string format_real(double v);

}  // namespace lvtts::eval
