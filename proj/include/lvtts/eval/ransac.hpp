#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lvtts::eval {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double at(double x) const { return slope * x + intercept; }
};

// Least squares over the points whose mask entry is set (all when empty).
LineFit ols(std::span<const double> xs, std::span<const double> ys, const std::vector<bool>& mask = {});

struct RansacFit {
  LineFit line;
  std::vector<bool> inliers;
  double threshold = 0.0;
  double max_latency = 0.0;  // line at the largest observed x
  std::size_t inlier_count() const;
};

// Two-point hypotheses, inlier counting under |residual| <= threshold, refit of
// the best consensus by least squares. Ties in count go to the smaller inlier
// residual sum. A threshold <= 0 starts at 1.5 x the median absolute residual
// of an OLS fit over all points, then is re-derived the same way around each
// robust fit for as long as it shrinks.
RansacFit ransac_fit(std::span<const double> xs, std::span<const double> ys, double threshold = 0.0,
                     std::size_t iterations = 200, std::uint64_t seed = 0);

// Columns: key, value (slope, intercept, threshold, inliers, points, max_latency).
void write_ransac_tsv(const std::filesystem::path& path, const RansacFit& fit);

// Rank correlation with average ranks for ties.
double spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace lvtts::eval
