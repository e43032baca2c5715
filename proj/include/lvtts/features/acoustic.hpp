#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lvtts/tensor.hpp"

namespace lvtts::features {

// Column layout of an acoustic frame.
inline constexpr std::size_t kCepstra = 40;
inline constexpr std::size_t kLogF0 = 40;
inline constexpr std::size_t kVf = 41;
inline constexpr std::size_t kUv = 42;
inline constexpr std::size_t kAcousticDim = 43;

// Samples per frame.
inline constexpr std::size_t kStride = 80;

// Raw log-F0 value written for unvoiced frames.
inline constexpr double kUnvoicedLogF0 = -1e9;

std::vector<double> make_uv_flag(std::span<const double> log_f0_raw);

// Linear interpolation across unvoiced gaps; edges hold the nearest voiced
// value. Throws DomainError if nothing is voiced.
std::vector<double> interpolate_log_f0(std::span<const double> log_f0_raw,
                                       std::span<const double> uv);

struct MinMaxStats {
  std::vector<double> min;
  std::vector<double> max;
};

MinMaxStats fit_min_max(std::span<const Tensor* const> frames);

// Per-column min-max to [0, 1]. A column with max == min maps to 0.5.
Tensor normalize_acoustic(const Tensor& frames, const MinMaxStats& stats);
Tensor denormalize_acoustic(const Tensor& frames, const MinMaxStats& stats);

// 1 where uv >= 0.5.
std::vector<double> binarize_uv(std::span<const double> uv);

}  // namespace lvtts::features
