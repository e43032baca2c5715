#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lvtts/tensor.hpp"

namespace lvtts::features {

struct PhoneSegment {
  std::size_t phone = 0;
  std::size_t duration = 0;  // frames
};

// Per-phone label: one-hot current, previous and next phone, then a few
// real-valued prosodic fields. Frame rows append abs_dur and rel_pos.
struct LabelLayout {
  std::size_t phones = 14;
  std::size_t prosodic = 4;

  std::size_t label_dim() const { return 3 * phones + prosodic; }
  std::size_t frame_dim() const { return label_dim() + 2; }
  std::size_t prosodic_offset() const { return 3 * phones; }
};

// Real-valued label columns are z-scored; durations divide by the longest
// training phone.
struct LabelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  double max_duration = 1.0;
};

// Copies each phone's label row `duration` times and appends
// abs_dur = min(1, duration / max_duration) and rel_pos = i / duration.
Tensor replicate_labels(std::span<const PhoneSegment> phones, const Tensor& phone_labels,
                        std::size_t total_frames, double max_duration);

LabelStats fit_label_stats(std::span<const std::vector<PhoneSegment>* const> phones,
                           std::span<const Tensor* const> phone_labels, const LabelLayout& layout);

// Z-scores the prosodic columns of per-phone labels. Zero-variance columns
// are only centred.
Tensor normalize_labels(const Tensor& phone_labels, const LabelStats& stats, const LabelLayout& layout);

}  // namespace lvtts::features
