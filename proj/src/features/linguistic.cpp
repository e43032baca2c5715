#include "lvtts/features/linguistic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lvtts/errors.hpp"

namespace lvtts::features {

Tensor replicate_labels(std::span<const PhoneSegment> phones, const Tensor& phone_labels,
                        std::size_t total_frames, double max_duration) {
  if (phone_labels.rows() != phones.size()) {
    throw DimensionError("replicate_labels: " + std::to_string(phones.size()) + " phones but " +
                         std::to_string(phone_labels.rows()) + " label rows");
  }
  if (!(max_duration > 0.0)) throw DomainError("replicate_labels: max_duration must be positive");
  std::size_t sum = 0;
  for (const PhoneSegment& p : phones) {
    if (p.duration == 0) throw DomainError("replicate_labels: phone with zero duration");
    sum += p.duration;
  }
  if (sum != total_frames) {
    throw DomainError("replicate_labels: durations sum to " + std::to_string(sum) + ", expected " +
                      std::to_string(total_frames));
  }

  const std::size_t l = phone_labels.cols();
  Tensor out = Tensor::matrix(total_frames, l + 2);
  std::size_t row = 0;
  for (std::size_t k = 0; k < phones.size(); ++k) {
    const std::size_t d = phones[k].duration;
    const double abs_dur = std::min(1.0, static_cast<double>(d) / max_duration);
    for (std::size_t i = 0; i < d; ++i, ++row) {
      auto dst = out.row(row);
      auto src = phone_labels.row(k);
      std::copy(src.begin(), src.end(), dst.begin());
      dst[l] = abs_dur;
      dst[l + 1] = static_cast<double>(i) / static_cast<double>(d);
    }
  }
  return out;
}

LabelStats fit_label_stats(std::span<const std::vector<PhoneSegment>* const> phones,
                           std::span<const Tensor* const> phone_labels, const LabelLayout& layout) {
  if (phones.size() != phone_labels.size() || phones.empty()) {
    throw PreconditionError("fit_label_stats: need matching, non-empty phone and label lists");
  }
  const std::size_t off = layout.prosodic_offset();
  const std::size_t k = layout.prosodic;
  LabelStats s{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0), 0.0};
  // Statistics are frame-weighted, matching what the decoder sees.
  double frames = 0.0;
  for (std::size_t u = 0; u < phones.size(); ++u) {
    for (std::size_t p = 0; p < phones[u]->size(); ++p) {
      const double d = static_cast<double>((*phones[u])[p].duration);
      s.max_duration = std::max(s.max_duration, d);
      frames += d;
      for (std::size_t j = 0; j < k; ++j) s.mean[j] += d * phone_labels[u]->at(p, off + j);
    }
  }
  for (double& m : s.mean) m /= frames;
  for (std::size_t u = 0; u < phones.size(); ++u) {
    for (std::size_t p = 0; p < phones[u]->size(); ++p) {
      const double d = static_cast<double>((*phones[u])[p].duration);
      for (std::size_t j = 0; j < k; ++j) {
        const double dev = phone_labels[u]->at(p, off + j) - s.mean[j];
        s.stddev[j] += d * dev * dev;
      }
    }
  }
  for (double& v : s.stddev) v = std::sqrt(v / frames);
  return s;
}

Tensor normalize_labels(const Tensor& phone_labels, const LabelStats& stats, const LabelLayout& layout) {
  if (phone_labels.cols() != layout.label_dim() || stats.mean.size() != layout.prosodic) {
    throw DimensionError("normalize_labels: labels " + shape_string(phone_labels.shape()) +
                         " do not match layout of width " + std::to_string(layout.label_dim()));
  }
  Tensor out = phone_labels;
  const std::size_t off = layout.prosodic_offset();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < layout.prosodic; ++j) {
      const double sd = stats.stddev[j] > 0.0 ? stats.stddev[j] : 1.0;
      out.at(r, off + j) = (phone_labels.at(r, off + j) - stats.mean[j]) / sd;
    }
  }
  return out;
}

}  // namespace lvtts::features
