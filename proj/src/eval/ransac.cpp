#include "lvtts/eval/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lvtts/errors.hpp"
#include "lvtts/eval/metrics.hpp"
#include "lvtts/rng.hpp"

namespace lvtts::eval {

LineFit ols(std::span<const double> xs, std::span<const double> ys, const std::vector<bool>& mask) {
  if (xs.size() != ys.size()) throw DimensionError("ols: x and y lengths differ");
  double n = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    n += 1.0;
    sx += xs[i];
    sy += ys[i];
  }
  if (n < 2.0) throw DomainError("ols: need at least 2 points");
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw DomainError("ols: all x values are equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

std::size_t RansacFit::inlier_count() const {
  return static_cast<std::size_t>(std::count(inliers.begin(), inliers.end(), true));
}

namespace {

// 1.5 x the median absolute residual around a line.
double median_threshold(std::span<const double> xs, std::span<const double> ys, const LineFit& line) {
  const std::size_t n = xs.size();
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = std::abs(ys[i] - line.at(xs[i]));
  std::nth_element(res.begin(), res.begin() + static_cast<long>(n / 2), res.end());
  double med = res[n / 2];
  if (n % 2 == 0) med = 0.5 * (med + *std::max_element(res.begin(), res.begin() + static_cast<long>(n / 2)));
  // exactly collinear data leaves a zero median
  if (med == 0.0) return 1e-12 * (1.0 + std::abs(line.slope) + std::abs(line.intercept));
  return 1.5 * med;
}

RansacFit consensus(std::span<const double> xs, std::span<const double> ys, double threshold,
                    std::size_t iterations, std::uint64_t seed) {
  const std::size_t n = xs.size();
  Rng rng(seed);
  std::size_t best_count = 0;
  double best_cost = 0.0;
  std::vector<bool> best;
  for (std::size_t it = 0; it < iterations; ++it) {
    const std::size_t a = rng.below(n);
    std::size_t b = rng.below(n - 1);
    if (b >= a) ++b;
    if (xs[a] == xs[b]) continue;
    const double slope = (ys[b] - ys[a]) / (xs[b] - xs[a]);
    const LineFit h{slope, ys[a] - slope * xs[a]};
    std::vector<bool> mask(n);
    std::size_t count = 0;
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::abs(ys[i] - h.at(xs[i]));
      if (r <= threshold) {
        mask[i] = true;
        ++count;
        cost += r;
      }
    }
    if (count > best_count || (count == best_count && cost < best_cost)) {
      best_count = count;
      best_cost = cost;
      best = std::move(mask);
    }
  }
  if (best_count < 2) throw DomainError("ransac_fit: no consensus set found");

  RansacFit fit;
  fit.threshold = threshold;
  fit.inliers = best;
  try {
    fit.line = ols(xs, ys, best);
  } catch (const DomainError&) {
    throw DomainError("ransac_fit: consensus set is degenerate");
  }
  fit.max_latency = fit.line.at(*std::max_element(xs.begin(), xs.end()));
  return fit;
}

}  // namespace

RansacFit ransac_fit(std::span<const double> xs, std::span<const double> ys, double threshold,
                     std::size_t iterations, std::uint64_t seed) {
  const std::size_t n = xs.size();
  if (ys.size() != n) throw DimensionError("ransac_fit: x and y lengths differ");
  if (n < 2) throw DomainError("ransac_fit: need at least 2 points");
  if (threshold > 0.0) return consensus(xs, ys, threshold, iterations, seed);

  // The first threshold comes from an OLS fit, which outliers drag away from
  // the inliers. Re-derive it around each robust fit while it keeps shrinking.
  RansacFit fit = consensus(xs, ys, median_threshold(xs, ys, ols(xs, ys)), iterations, seed);
  for (int round = 0; round < 8; ++round) {
    const double next = median_threshold(xs, ys, fit.line);
    if (!(next < fit.threshold)) break;
    try {
      fit = consensus(xs, ys, next, iterations, seed);
    } catch (const DomainError&) {
      break;
    }
  }
  return fit;
}

void write_ransac_tsv(const std::filesystem::path& path, const RansacFit& fit) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "key\tvalue\n"
     << "slope\t" << format_real(fit.line.slope) << '\n'
     << "intercept\t" << format_real(fit.line.intercept) << '\n'
     << "threshold\t" << format_real(fit.threshold) << '\n'
     << "inliers\t" << fit.inlier_count() << '\n'
     << "points\t" << fit.inliers.size() << '\n'
     << "max_latency\t" << format_real(fit.max_latency) << '\n';
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("spearman: need two equal-length samples");
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double m = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - m) * (ry[i] - m);
    sxx += (rx[i] - m) * (rx[i] - m);
    syy += (ry[i] - m) * (ry[i] - m);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lvtts::eval
