#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lvtts/errors.hpp"
#include "lvtts/features/acoustic.hpp"
#include "lvtts/features/corpus.hpp"
#include "lvtts/features/linguistic.hpp"
#include "lvtts/features/synth.hpp"
#include "lvtts/rng.hpp"

using namespace lvtts;
using namespace lvtts::features;

namespace {

const Corpus& small_corpus() {
  static const Corpus c = [] {
    SynthSpec spec;
    spec.utterances = 20;
    spec.seed = 5;
    return generate_corpus(spec);
  }();
  return c;
}

// Windowed-sinc low-pass, as pitch trackers apply before autocorrelation.
std::vector<double> lowpass(const std::vector<double>& x, double cutoff_hz, double sr) {
  const int half = 64;
  std::vector<double> h(2 * half + 1);
  const double fc = cutoff_hz / sr;
  for (int n = -half; n <= half; ++n) {
    const double sinc = n == 0 ? 2.0 * fc : std::sin(2.0 * M_PI * fc * n) / (M_PI * n);
    const double hann = 0.5 + 0.5 * std::cos(M_PI * n / (half + 1));
    h[n + half] = sinc * hann;
  }
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int n = -half; n <= half; ++n) {
      const auto j = static_cast<std::ptrdiff_t>(i) - n;
      if (j >= 0 && j < static_cast<std::ptrdiff_t>(x.size())) y[i] += h[n + half] * x[j];
    }
  }
  return y;
}

// Normalized autocorrelation pitch estimate. Takes the
// first peak within 20% of the best one to avoid period doubling.
double autocorr_f0(const std::vector<double>& x, std::size_t begin, std::size_t len, double sr) {
  const std::size_t min_lag = static_cast<std::size_t>(sr / 400.0);
  const std::size_t max_lag = std::min(static_cast<std::size_t>(sr / 55.0), len / 2);
  std::vector<double> r(max_lag + 1, -1.0);
  for (std::size_t lag = min_lag; lag <= max_lag && lag < len; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t n = begin; n + lag < begin + len; ++n) {
      xy += x[n] * x[n + lag];
      xx += x[n] * x[n];
      yy += x[n + lag] * x[n + lag];
    }
    r[lag] = xy / std::sqrt(xx * yy + 1e-300);
  }
  const double best = *std::max_element(r.begin(), r.end());
  for (std::size_t lag = min_lag + 1; lag < max_lag; ++lag) {
    if (r[lag] >= 0.8 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) return sr / lag;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("uv flag") {
  const double u = kUnvoicedLogF0;
  CHECK(make_uv_flag(std::vector<double>{u, u}) == std::vector<double>{0, 0});
  CHECK(make_uv_flag(std::vector<double>{4.6, 4.7}) == std::vector<double>{1, 1});
  CHECK(make_uv_flag(std::vector<double>{4.6, u, 4.7, u}) == std::vector<double>{1, 0, 1, 0});
}

TEST_CASE("log-F0 interpolation") {
  const double u = kUnvoicedLogF0;
  SUBCASE("midpoint") {
    const std::vector<double> raw{std::log(100.0), u, std::log(110.0)};
    const auto out = interpolate_log_f0(raw, make_uv_flag(raw));
    CHECK(out[1] == doctest::Approx((std::log(100.0) + std::log(110.0)) / 2).epsilon(1e-15));
    CHECK(out[0] == raw[0]);
    CHECK(out[2] == raw[2]);
  }
  SUBCASE("no gaps") {
    const std::vector<double> raw{4.1, 4.2, 4.3};
    CHECK(interpolate_log_f0(raw, make_uv_flag(raw)) == raw);
  }
  SUBCASE("edges hold") {
    const std::vector<double> raw{u, u, std::log(120.0)};
    const auto out = interpolate_log_f0(raw, make_uv_flag(raw));
    for (double v : out) CHECK(v == std::log(120.0));
    const std::vector<double> tail{std::log(90.0), u, u};
    for (double v : interpolate_log_f0(tail, make_uv_flag(tail))) CHECK(v == std::log(90.0));
  }
  SUBCASE("all unvoiced") {
    const std::vector<double> raw{u, u};
    CHECK_THROWS_AS(interpolate_log_f0(raw, make_uv_flag(raw)), DomainError);
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(interpolate_log_f0(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}),
                    DimensionError);
  }
}

TEST_CASE("min-max normalization") {
  Rng rng(1);
  Tensor a = Tensor::matrix(100, 3);
  for (std::size_t r = 0; r < 100; ++r) {
    a.at(r, 0) = rng.uniform(-5.0, 5.0);
    a.at(r, 1) = rng.uniform(0.0, 1e-3);
    a.at(r, 2) = 7.0;
  }
  const Tensor* parts[] = {&a};
  const MinMaxStats s = fit_min_max(parts);
  const Tensor n = normalize_acoustic(a, s);
  for (std::size_t c = 0; c < 2; ++c) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t r = 0; r < 100; ++r) {
      lo = std::min(lo, n.at(r, c));
      hi = std::max(hi, n.at(r, c));
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
  }
  for (std::size_t r = 0; r < 100; ++r) CHECK(n.at(r, 2) == 0.5);
  const Tensor back = denormalize_acoustic(n, s);
  CHECK(max_abs_diff(back, a) < 1e-12);
  CHECK_THROWS_AS(normalize_acoustic(Tensor::matrix(2, 4), s), DimensionError);
}

TEST_CASE("uv binarization ties to voiced") {
  CHECK(binarize_uv(std::vector<double>{0.5, 0.4999, 0.9, -0.1}) == std::vector<double>{1, 0, 1, 0});
}

TEST_CASE("label replication") {
  const Tensor labels({2, 2}, {1, 0, 0, 1});
  SUBCASE("rel_pos ramp") {
    const std::vector<PhoneSegment> phones{{0, 3}, {1, 2}};
    const Tensor f = replicate_labels(phones, labels, 5, 3.0);
    REQUIRE(f.rows() == 5);
    REQUIRE(f.cols() == 4);
    CHECK(f.at(0, 3) == 0.0);
    CHECK(f.at(1, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(f.at(2, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(f.at(0, 2) == 1.0);
    CHECK(f.at(3, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(f.at(4, 0) == 0.0);
    CHECK(f.at(4, 1) == 1.0);
  }
  SUBCASE("single phone") {
    const Tensor one({1, 2}, {0.3, 0.7});
    const std::vector<PhoneSegment> phones{{0, 6}};
    const Tensor f = replicate_labels(phones, one, 6, 10.0);
    for (std::size_t r = 0; r < 6; ++r) {
      CHECK(f.at(r, 0) == 0.3);
      CHECK(f.at(r, 1) == 0.7);
      CHECK(f.at(r, 2) == 0.6);
      if (r > 0) CHECK(f.at(r, 3) > f.at(r - 1, 3));
    }
  }
  SUBCASE("duration clamps") {
    const std::vector<PhoneSegment> phones{{0, 4}, {1, 9}};
    const Tensor f = replicate_labels(phones, labels, 13, 4.0);
    CHECK(f.at(0, 2) == 1.0);
    CHECK(f.at(12, 2) == 1.0);
  }
  SUBCASE("errors") {
    const std::vector<PhoneSegment> zero{{0, 0}, {1, 2}};
    CHECK_THROWS_AS(replicate_labels(zero, labels, 2, 3.0), DomainError);
    const std::vector<PhoneSegment> phones{{0, 3}, {1, 2}};
    CHECK_THROWS_AS(replicate_labels(phones, labels, 6, 3.0), DomainError);
  }
}

TEST_CASE("synthetic corpus structure") {
  const Corpus& c = small_corpus();
  REQUIRE(c.utterances.size() == 20);
  for (const Utterance& u : c.utterances) {
    CHECK(u.waveform.samples.size() == u.frames() * kStride);
    std::size_t sum = 0;
    for (const PhoneSegment& p : u.phones) sum += p.duration;
    CHECK(sum == u.frames());
    CHECK(u.frames() >= 150);
    CHECK(u.frames() <= 300);
    const Tensor lin = c.linguistic(u);
    CHECK(lin.rows() == u.frames());
    CHECK(lin.cols() == c.layout.frame_dim());
    CHECK(c.layout.label_dim() == 46);
    for (double v : u.waveform.samples) REQUIRE(std::abs(v) <= 1.0);
    for (std::size_t t = 0; t < u.frames(); ++t) {
      const double uv = u.acoustic.at(t, kUv);
      REQUIRE((uv == 0.0 || uv == 1.0));
    }
    // Interpolation must leave voiced frames alone and remove every sentinel.
    const auto raw = raw_log_f0(u.acoustic);
    const auto interp = interpolate_log_f0(raw, make_uv_flag(raw));
    for (std::size_t t = 0; t < raw.size(); ++t) {
      REQUIRE(interp[t] > 0.0);
      if (raw[t] != kUnvoicedLogF0) REQUIRE(interp[t] == raw[t]);
    }
  }
}

TEST_CASE("split sizes and stats provenance") {
  SynthSpec spec;
  spec.utterances = 100;
  spec.min_frames = 60;
  spec.max_frames = 80;
  spec.seed = 9;
  const Corpus c = generate_corpus(spec);
  CHECK(c.split(Split::Train).size() == 80);
  CHECK(c.split(Split::Valid).size() == 10);
  CHECK(c.split(Split::Test).size() == 10);
  std::set<std::string> ids;
  for (const Utterance& u : c.utterances) ids.insert(u.id);
  CHECK(ids.size() == 100);
  CHECK(c.stats.sources.size() == 80);
  CHECK_NOTHROW(check_provenance(c));

  Corpus tampered = c;
  tampered.stats.sources.push_back(c.split(Split::Test).front()->id);
  CHECK_THROWS_AS(check_provenance(tampered), PreconditionError);

  // Train frames span [0, 1] after normalization; other splits may exceed it.
  double lo = 1.0, hi = 0.0;
  for (const Utterance* u : c.split(Split::Train)) {
    const Tensor n = c.normalized_acoustic(*u);
    for (std::size_t t = 0; t < n.rows(); ++t) {
      lo = std::min(lo, n.at(t, 1));
      hi = std::max(hi, n.at(t, 1));
    }
  }
  CHECK(lo == 0.0);
  CHECK(hi == 1.0);
}

TEST_CASE("generation is deterministic") {
  SynthSpec spec;
  spec.utterances = 4;
  spec.seed = 77;
  const Corpus a = generate_corpus(spec);
  const Corpus b = generate_corpus(spec);
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].waveform.samples == b.utterances[i].waveform.samples);
    CHECK(a.utterances[i].acoustic.storage() == b.utterances[i].acoustic.storage());
  }
  spec.seed = 78;
  const Corpus d = generate_corpus(spec);
  CHECK(a.utterances[0].waveform.samples != d.utterances[0].waveform.samples);
}

TEST_CASE("voiced frames carry the stated pitch") {
  const Corpus& c = small_corpus();
  std::size_t checked = 0;
  std::size_t failed = 0;
  for (const Utterance& u : c.utterances) {
    const double sr = u.waveform.sample_rate;
    const std::vector<double> smooth = lowpass(u.waveform.samples, 1000.0, sr);
    for (std::size_t t = 3; t + 3 < u.frames(); ++t) {
      bool interior = true;
      for (std::size_t k = t - 3; k <= t + 3; ++k) interior = interior && u.acoustic.at(k, kUv) == 1.0;
      if (!interior) continue;
      // Window of seven frames centred on frame t.
      const double f0 = autocorr_f0(smooth, (t - 3) * kStride, 7 * kStride, sr);
      const double ref = std::exp(u.acoustic.at(t, kLogF0));
      ++checked;
      if (std::abs(f0 - ref) > 0.05 * ref) {
        ++failed;
        MESSAGE(u.id << " frame " << t << ": estimated " << f0 << " Hz, expected " << ref);
      }
    }
  }
  CHECK(checked > 500);
  CHECK(failed == 0);
}

TEST_CASE("cepstra describe the generated envelope") {
  SynthSpec spec;
  const auto inv = phone_inventory(spec);
  CHECK(inv.size() == 14);
  std::size_t voiced = 0;
  for (const PhoneModel& m : inv) voiced += m.voiced ? 1 : 0;
  CHECK(voiced == 9);
  // For an all-pole model the truncated cepstrum matches -log|A(w)| closely.
  for (const PhoneModel& m : inv) {
    if (m.ar.empty()) continue;
    for (double w : {0.1, 0.7, 1.5, 2.6}) {
      double re = 1.0, im = 0.0;
      for (std::size_t i = 0; i < m.ar.size(); ++i) {
        re += m.ar[i] * std::cos((i + 1) * w);
        im -= m.ar[i] * std::sin((i + 1) * w);
      }
      const double exact = -0.5 * std::log(re * re + im * im);
      CHECK(std::abs(log_envelope(0.0, m.cepstrum, w) - exact) < 0.05);
    }
  }
}

TEST_CASE("corpus save / load round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "lvtts_corpus_test";
  std::filesystem::remove_all(dir);
  const Corpus& c = small_corpus();
  save_corpus(c, dir);
  const Corpus back = load_corpus(dir);
  REQUIRE(back.utterances.size() == c.utterances.size());
  for (std::size_t i = 0; i < c.utterances.size(); ++i) {
    const Utterance& a = c.utterances[i];
    const Utterance& b = back.utterances[i];
    CHECK(a.id == b.id);
    CHECK(a.split == b.split);
    CHECK(a.waveform.samples == b.waveform.samples);
    CHECK(a.acoustic.storage() == b.acoustic.storage());
    CHECK(a.phone_labels.storage() == b.phone_labels.storage());
    CHECK(c.linguistic(a).storage() == back.linguistic(b).storage());
  }
  CHECK(back.stats.acoustic.min == c.stats.acoustic.min);
  CHECK(back.stats.labels.stddev == c.stats.labels.stddev);
  CHECK(back.stats.sources == c.stats.sources);

  const Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
  write_features(dir / "m.lvft", m);
  const Tensor mb = read_features(dir / "m.lvft");
  CHECK(mb.shape() == m.shape());
  CHECK(mb.storage() == m.storage());
  CHECK_THROWS_AS(read_features(dir / "manifest.tsv"), FormatError);
  CHECK_THROWS_AS(load_corpus(dir / "nope"), PreconditionError);
  std::filesystem::remove_all(dir);
}
