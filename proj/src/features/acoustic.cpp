#include "lvtts/features/acoustic.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "lvtts/errors.hpp"

namespace lvtts::features {

namespace {

bool is_unvoiced(double v) { return v <= kUnvoicedLogF0 * 0.5; }

void check_stats(const Tensor& frames, const MinMaxStats& stats) {
  if (frames.cols() != stats.min.size() || stats.min.size() != stats.max.size()) {
    throw DimensionError("acoustic frames " + shape_string(frames.shape()) + " vs stats of width " +
                         std::to_string(stats.min.size()));
  }
}

}  // namespace

std::vector<double> make_uv_flag(std::span<const double> log_f0_raw) {
  std::vector<double> uv(log_f0_raw.size());
  std::transform(log_f0_raw.begin(), log_f0_raw.end(), uv.begin(),
                 [](double v) { return is_unvoiced(v) ? 0.0 : 1.0; });
  return uv;
}

std::vector<double> interpolate_log_f0(std::span<const double> log_f0_raw,
                                       std::span<const double> uv) {
  if (log_f0_raw.size() != uv.size()) {
    throw DimensionError("log-F0 length " + std::to_string(log_f0_raw.size()) +
                         " != uv length " + std::to_string(uv.size()));
  }
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    if (uv[i] >= 0.5) anchors.push_back(i);
  }
  if (anchors.empty()) throw DomainError("interpolate_log_f0: no voiced frame to anchor on");

  std::vector<double> out(log_f0_raw.begin(), log_f0_raw.end());
  for (std::size_t i = 0; i < anchors.front(); ++i) out[i] = log_f0_raw[anchors.front()];
  for (std::size_t i = anchors.back() + 1; i < out.size(); ++i) out[i] = log_f0_raw[anchors.back()];
  for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
    const std::size_t lo = anchors[a];
    const std::size_t hi = anchors[a + 1];
    const double span = static_cast<double>(hi - lo);
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double w = static_cast<double>(i - lo) / span;
      out[i] = (1.0 - w) * log_f0_raw[lo] + w * log_f0_raw[hi];
    }
  }
  return out;
}

MinMaxStats fit_min_max(std::span<const Tensor* const> frames) {
  if (frames.empty()) throw PreconditionError("fit_min_max: no frames");
  const std::size_t d = frames.front()->cols();
  MinMaxStats s{std::vector<double>(d, std::numeric_limits<double>::infinity()),
                std::vector<double>(d, -std::numeric_limits<double>::infinity())};
  for (const Tensor* t : frames) {
    if (t->cols() != d) throw DimensionError("fit_min_max: mixed widths");
    for (std::size_t r = 0; r < t->rows(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        s.min[c] = std::min(s.min[c], t->at(r, c));
        s.max[c] = std::max(s.max[c], t->at(r, c));
      }
    }
  }
  return s;
}

Tensor normalize_acoustic(const Tensor& frames, const MinMaxStats& stats) {
  check_stats(frames, stats);
  Tensor out = frames;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double range = stats.max[c] - stats.min[c];
      out.at(r, c) = range > 0.0 ? (frames.at(r, c) - stats.min[c]) / range : 0.5;
    }
  }
  return out;
}

Tensor denormalize_acoustic(const Tensor& frames, const MinMaxStats& stats) {
  check_stats(frames, stats);
  Tensor out = frames;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double range = stats.max[c] - stats.min[c];
      out.at(r, c) = range > 0.0 ? stats.min[c] + frames.at(r, c) * range : stats.min[c];
    }
  }
  return out;
}

std::vector<double> binarize_uv(std::span<const double> uv) {
  std::vector<double> out(uv.size());
  std::transform(uv.begin(), uv.end(), out.begin(), [](double v) { return v >= 0.5 ? 1.0 : 0.0; });
  return out;
}

}  // namespace lvtts::features
