#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "lvtts/errors.hpp"
#include "lvtts/eval/benchmark.hpp"
#include "lvtts/eval/metrics.hpp"
#include "lvtts/eval/ransac.hpp"
#include "lvtts/features/acoustic.hpp"
#include "lvtts/features/synth.hpp"

using namespace lvtts;
using namespace lvtts::eval;

namespace {

Tensor random_cepstra(std::size_t t, Rng& rng) {
  Tensor m = Tensor::matrix(t, 43);
  for (double& v : m.values()) v = rng.uniform(-2.0, 2.0);
  return m;
}

// Independent recomputations in extended precision.
long double mcd_oracle(const Tensor& a, const Tensor& b) {
  long double total = 0.0L;
  for (std::size_t t = 0; t < a.rows(); ++t) {
    long double s = 0.0L;
    for (std::size_t d = 1; d <= 39; ++d) {
      const long double e = static_cast<long double>(a.at(t, d)) - b.at(t, d);
      s += e * e;
    }
    total += 10.0L / std::log(10.0L) * std::sqrt(2.0L * s);
  }
  return total / a.rows();
}

}  // namespace

TEST_CASE("mcd") {
  Rng rng(1);
  const Tensor a = random_cepstra(10, rng);
  CHECK(mcd(a, a) == 0.0);

  Tensor b = Tensor::matrix(1, 43), c = b;
  c.at(0, 7) = 0.3;
  CHECK(mcd(b, c) == doctest::Approx(10.0 / std::numbers::ln10 * std::sqrt(2.0) * 0.3).epsilon(1e-14));
  c.at(0, 0) = 5.0;  // energy term is ignored
  CHECK(mcd(b, c) == doctest::Approx(10.0 / std::numbers::ln10 * std::sqrt(2.0) * 0.3).epsilon(1e-14));

  const Tensor d = random_cepstra(10, rng);
  CHECK(mcd(a, d) == mcd(d, a));
  CHECK_THROWS_AS(mcd(a, random_cepstra(9, rng)), DimensionError);
}

TEST_CASE("f0 rmse") {
  const std::vector<double> ref = {std::log(100.0), std::log(120.0), 0.0, std::log(200.0)};
  const std::vector<double> uv = {1, 1, 0, 1};
  CHECK(f0_rmse(ref, ref, uv) == 0.0);

  std::vector<double> shifted(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) shifted[i] = std::log(std::exp(ref[i]) + 5.0);
  CHECK(f0_rmse(ref, shifted, uv) == doctest::Approx(5.0).epsilon(1e-12));

  const std::vector<double> pred = {std::log(110.0), std::log(120.0), std::log(300.0), std::log(190.0)};
  CHECK(f0_rmse(ref, pred, uv) == doctest::Approx(std::sqrt((100.0 + 0.0 + 100.0) / 3.0)).epsilon(1e-12));

  CHECK_THROWS_AS(f0_rmse(ref, ref, std::vector<double>(4, 0.0)), DomainError);
  CHECK_THROWS_AS(f0_rmse(ref, std::vector<double>(3, 0.0), uv), DimensionError);
}

TEST_CASE("uv accuracy") {
  const std::vector<double> a = {1, 0, 1, 0};
  CHECK(uv_accuracy(a, a) == 100.0);
  CHECK(uv_accuracy(a, std::vector<double>{0, 1, 0, 1}) == 0.0);
  CHECK(uv_accuracy(a, std::vector<double>{1, 1, 1, 1}) == 50.0);
  CHECK_THROWS_AS(uv_accuracy(a, std::vector<double>{1, 0.5, 1, 0}), DomainError);
  CHECK_THROWS_AS(uv_accuracy(a, std::vector<double>{1}), DimensionError);
}

TEST_CASE("metric identities and scalar recomputation on 100 random instances") {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const std::size_t t = 1 + rng.below(40);
    const Tensor a = random_cepstra(t, rng), b = random_cepstra(t, rng);
    std::vector<double> fa(t), fb(t), ua(t), ub(t);
    for (std::size_t i = 0; i < t; ++i) {
      fa[i] = std::log(rng.uniform(60.0, 300.0));
      fb[i] = std::log(rng.uniform(60.0, 300.0));
      ua[i] = rng.bernoulli(0.6) ? 1.0 : 0.0;
      ub[i] = rng.bernoulli(0.6) ? 1.0 : 0.0;
    }
    ua[0] = 1.0;

    CHECK(mcd(a, a) == 0.0);
    CHECK(f0_rmse(fa, fa, ua) == 0.0);
    CHECK(uv_accuracy(ua, ua) == 100.0);

    CHECK(std::abs(mcd(a, b) - static_cast<double>(mcd_oracle(a, b))) < 1e-9);
    long double sq = 0.0L;
    std::size_t n = 0, hits = 0;
    for (std::size_t i = 0; i < t; ++i) {
      hits += ua[i] == ub[i];
      if (ua[i] != 1.0) continue;
      const long double e = std::exp(static_cast<long double>(fa[i])) - std::exp(static_cast<long double>(fb[i]));
      sq += e * e;
      ++n;
    }
    CHECK(std::abs(f0_rmse(fa, fb, ua) - static_cast<double>(std::sqrt(sq / n))) < 1e-9);
    CHECK(std::abs(uv_accuracy(ua, ub) - 100.0 * static_cast<double>(hits) / static_cast<double>(t)) < 1e-9);
  }
}

TEST_CASE("f0 histogram") {
  const std::vector<double> f0 = {std::log(150.0), std::log(60.0), std::log(100.0), std::log(400.0), std::log(250.0)};
  SUBCASE("unvoiced frames are not counted") {
    for (std::size_t c : f0_histogram(f0, std::vector<double>(5, 0.0), 8, 50.0, 250.0)) CHECK(c == 0);
  }
  SUBCASE("range midpoint lands in the middle bin") {
    const auto h = f0_histogram(std::vector<double>{std::log(150.0)}, std::vector<double>{1.0}, 5, 50.0, 250.0);
    CHECK(h == std::vector<std::size_t>{0, 0, 1, 0, 0});
  }
  SUBCASE("counts partition the voiced in-range frames") {
    const auto h = f0_histogram(f0, std::vector<double>(5, 1.0), 4, 50.0, 250.0);
    std::size_t total = 0;
    for (std::size_t c : h) total += c;
    CHECK(total == 4);  // 400 Hz is out of range, 250 Hz falls in the last bin
    CHECK(h.back() == 1);
  }
  CHECK_THROWS_AS(f0_histogram(f0, std::vector<double>(5, 1.0), 0, 50.0, 250.0), DomainError);
}

TEST_CASE("ols and spearman") {
  const std::vector<double> x = {0, 1, 2, 3}, y = {1, 3, 5, 7};
  const LineFit f = ols(x, y);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(ols(std::vector<double>{1, 1}, std::vector<double>{0, 2}), DomainError);
  CHECK(spearman(x, y) == 1.0);
  CHECK(spearman(x, std::vector<double>{4, 3, 2, 1}) == -1.0);
  CHECK(spearman(x, std::vector<double>{1, 10, 100, 1000}) == 1.0);
}

TEST_CASE("ransac on a line with gross outliers") {
  Rng rng(3);
  std::vector<double> xs, ys;
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform(0.0, 10.0);
    xs.push_back(x);
    ys.push_back(2.0 * x + 1.0);
  }
  for (int i = 0; i < 10; ++i) {
    xs.push_back(rng.uniform(0.0, 10.0));
    ys.push_back(rng.uniform(60.0, 200.0));
  }
  const RansacFit fit = ransac_fit(xs, ys);
  CHECK(std::abs(fit.line.slope - 2.0) < 1e-6);
  CHECK(std::abs(fit.line.intercept - 1.0) < 1e-6);
  CHECK(fit.inlier_count() == 50);
  CHECK(fit.max_latency == doctest::Approx(fit.line.at(*std::max_element(xs.begin(), xs.end()))));
}

TEST_CASE("ransac with 40% outliers over 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(5, seed));
    const double slope = rng.uniform(-3.0, 3.0), intercept = rng.uniform(-5.0, 5.0);
    std::vector<double> xs, ys;
    for (int i = 0; i < 60; ++i) {
      const double x = rng.uniform(0.0, 20.0);
      xs.push_back(x);
      ys.push_back(slope * x + intercept);
    }
    for (int i = 0; i < 40; ++i) {
      const double x = rng.uniform(0.0, 20.0);
      xs.push_back(x);
      ys.push_back(slope * x + intercept + (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(1e3, 5e3));
    }
    INFO("seed " << seed);
    const RansacFit fit = ransac_fit(xs, ys, 0.0, 200, seed);
    CHECK(std::abs(fit.line.slope - slope) < 1e-6);
    CHECK(std::abs(fit.line.intercept - intercept) < 1e-6);
    CHECK(fit.inlier_count() == 60);

    for (std::size_t i = 60; i < 100; ++i) ys[i] = slope * xs[i] + intercept + (i % 2 ? 1.0 : -1.0) * rng.uniform(1.0, 30.0);
    const RansacFit tight = ransac_fit(xs, ys, 1e-3, 200, seed);
    CHECK(std::abs(tight.line.slope - slope) < 1e-6);
    CHECK(std::abs(tight.line.intercept - intercept) < 1e-6);
    const RansacFit moderate = ransac_fit(xs, ys, 0.0, 200, seed);
    CHECK(std::abs(moderate.line.slope - slope) < 1e-6);
    CHECK(std::abs(moderate.line.intercept - intercept) < 1e-6);
    CHECK(moderate.inlier_count() == 60);
  }
}

TEST_CASE("ransac edge cases") {
  SUBCASE("collinear points give the least-squares line over all of them") {
    const std::vector<double> x = {0, 1, 2, 3, 4}, y = {-1, 0.5, 2, 3.5, 5};
    const RansacFit fit = ransac_fit(x, y);
    const LineFit o = ols(x, y);
    CHECK(fit.inlier_count() == 5);
    CHECK(fit.line.slope == o.slope);
    CHECK(fit.line.intercept == o.intercept);
  }
  CHECK_THROWS_AS(ransac_fit(std::vector<double>{1}, std::vector<double>{1}), DomainError);
  CHECK_THROWS_AS(ransac_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}, 1.0), DomainError);
}

TEST_CASE("latency benchmark") {
  decoder::DecoderConfig cfg;
  cfg.arch = decoder::Arch::Rnn;
  decoder::Decoder rnn(cfg);
  cfg.arch = decoder::Arch::Salad;
  decoder::Decoder salad(cfg);
  Rng rng(1);
  rnn.init(rng);
  salad.init(rng);
  BenchOptions opts;
  opts.lengths_s = {0.1, 0.2, 0.3, 0.4, 0.5};
  opts.repetitions = 3;
  const auto rp = latency_benchmark(rnn, "rnn", opts);
  const auto sp = latency_benchmark(salad, "salad", opts);
  REQUIRE(rp.size() == 15);
  REQUIRE(sp.size() == 15);
  for (const LatencyPoint& p : rp) {
    CHECK(p.sequential_steps == p.frames);
    CHECK(p.wall_s > 0.0);
  }
  for (const LatencyPoint& p : sp) {
    CHECK(p.passes == 1);
    CHECK(p.sequential_steps == 0);
  }
  CHECK(rp[0].frames == 20);
  CHECK(rp[0].duration_s == doctest::Approx(0.1));
}

TEST_CASE("corpus evaluation") {
  features::SynthSpec spec;
  spec.utterances = 10;
  spec.min_frames = 60;
  spec.max_frames = 90;
  const features::Corpus corpus = features::generate_corpus(spec);
  SUBCASE("ground truth scores perfectly") {
    const DecoderEvaluation e = evaluate_predictions(
        corpus, features::Split::Test, [&](const features::Utterance& u) { return corpus.normalized_acoustic(u); });
    REQUIRE(!e.utterances.empty());
    CHECK(e.total.mcd_db < 1e-9);
    CHECK(e.total.f0_rmse_hz < 1e-9);
    CHECK(e.total.uv_accuracy_pct == 100.0);
  }
  SUBCASE("mean frame baseline is worse than ground truth and writes a table") {
    const DecoderEvaluation e = evaluate_predictions(corpus, features::Split::Test, mean_frame_predictor(corpus));
    CHECK(e.total.mcd_db > 0.0);
    const auto path = std::filesystem::temp_directory_path() / "lvtts_eval_metrics.tsv";
    write_metrics_tsv(path, e);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "id\tframes\tmcd_db\tf0_rmse_hz\tuv_accuracy_pct");
    std::filesystem::remove(path);
  }
}
