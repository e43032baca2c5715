#include "lvtts/features/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lvtts/errors.hpp"
#include "lvtts/rng.hpp"

namespace lvtts::features {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMaxHarmonics = 128;

struct Resonance {
  double hz;
  double radius;
};

PhoneModel all_pole(const std::vector<Resonance>& poles, double sample_rate) {
  PhoneModel m;
  m.cepstrum.assign(kCepstra - 1, 0.0);
  for (std::size_t n = 1; n < kCepstra; ++n) {
    double c = 0.0;
    for (const Resonance& p : poles) {
      const double theta = kTwoPi * p.hz / sample_rate;
      c += std::pow(p.radius, static_cast<double>(n)) * std::cos(n * theta);
    }
    m.cepstrum[n - 1] = c / static_cast<double>(n);
  }
  std::vector<double> a{1.0};
  for (const Resonance& p : poles) {
    const double theta = kTwoPi * p.hz / sample_rate;
    const double q[3] = {1.0, -2.0 * p.radius * std::cos(theta), p.radius * p.radius};
    std::vector<double> next(a.size() + 2, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) next[i + j] += a[i] * q[j];
    }
    a = std::move(next);
  }
  m.ar.assign(a.begin() + 1, a.end());
  return m;
}

double impulse_energy(const std::vector<double>& ar) {
  std::vector<double> y(4096, 0.0);
  double e = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    double v = n == 0 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < ar.size() && i < n; ++i) v -= ar[i] * y[n - 1 - i];
    y[n] = v;
    e += v * v;
  }
  return e;
}

double harmonic_rms(const PhoneModel& m, double f0, double sample_rate) {
  double power = 0.0;
  for (std::size_t k = 1; k < kMaxHarmonics && k * f0 < m.vf_hz; ++k) {
    power += std::exp(2.0 * log_envelope(0.0, m.cepstrum, kTwoPi * k * f0 / sample_rate)) / 2.0;
  }
  return std::sqrt(power);
}

std::size_t draw_duration(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

Utterance make_utterance(const SynthSpec& spec, const std::vector<PhoneModel>& inventory,
                         std::size_t index) {
  Rng rng(mix_seed(spec.seed, index));
  const double sr = spec.sample_rate;
  const std::size_t total = draw_duration(rng, spec.min_frames, spec.max_frames);
  const std::size_t longest = std::max(spec.voiced_max, spec.unvoiced_max);

  Utterance u;
  u.id = "utt" + std::to_string(10000 + index).substr(1);
  u.phones.push_back({0, draw_duration(rng, spec.silence_min, spec.silence_max)});
  std::size_t remaining = total - u.phones.front().duration;
  while (remaining > longest + spec.silence_min) {
    const std::size_t p = 1 + rng.below(spec.phones - 1);
    const std::size_t d = inventory[p].voiced ? draw_duration(rng, spec.voiced_min, spec.voiced_max)
                                              : draw_duration(rng, spec.unvoiced_min, spec.unvoiced_max);
    u.phones.push_back({p, d});
    remaining -= d;
  }
  u.phones.push_back({0, remaining});
  const std::size_t n = u.phones.size();
  if (std::none_of(u.phones.begin(), u.phones.end(),
                   [&](const PhoneSegment& s) { return inventory[s.phone].voiced; })) {
    u.phones[1].phone = 1;
  }

  // Prosody: base pitch with declination, optional accent, final fall.
  const double base = rng.uniform(spec.f0_min, spec.f0_max);
  const double pitch_level = (base - spec.f0_min) / (spec.f0_max - spec.f0_min);
  std::size_t final_phone = n - 2;
  std::vector<double> stress(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (inventory[u.phones[k].phone].voiced && rng.bernoulli(0.3)) stress[k] = 1.0;
  }

  const std::size_t l = 3 * spec.phones + 4;
  u.phone_labels = Tensor::matrix(n, l);
  for (std::size_t k = 0; k < n; ++k) {
    auto row = u.phone_labels.row(k);
    row[u.phones[k].phone] = 1.0;
    row[spec.phones + (k > 0 ? u.phones[k - 1].phone : 0)] = 1.0;
    row[2 * spec.phones + (k + 1 < n ? u.phones[k + 1].phone : 0)] = 1.0;
    row[3 * spec.phones + 0] = stress[k];
    row[3 * spec.phones + 1] = static_cast<double>(k) / static_cast<double>(n - 1);
    row[3 * spec.phones + 2] = pitch_level;
    row[3 * spec.phones + 3] = k == final_phone ? 1.0 : 0.0;
  }

  // Frame-level parameters.
  u.acoustic = Tensor::matrix(total, kAcousticDim);
  std::vector<double> f0(total);
  std::vector<std::size_t> phone_of(total);
  std::size_t t = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const PhoneModel& m = inventory[u.phones[k].phone];
    const std::size_t d = u.phones[k].duration;
    for (std::size_t i = 0; i < d; ++i, ++t) {
      const double pos = static_cast<double>(i) / static_cast<double>(d);
      const double bump = std::sin(std::numbers::pi * (i + 0.5) / static_cast<double>(d));
      const double along = (static_cast<double>(k) + pos) / static_cast<double>(n - 1);
      double f = base * (1.0 - 0.15 * along) * (1.0 + 0.1 * stress[k] * bump);
      if (k == final_phone) f *= 1.0 - 0.1 * pos;
      f0[t] = f;
      phone_of[t] = k;

      const double level = u.phones[k].phone == 0 ? 1.0 : (0.75 + 0.25 * bump) * (1.0 + 0.25 * stress[k]);
      auto row = u.acoustic.row(t);
      row[0] = std::log(m.gain * level);
      std::copy(m.cepstrum.begin(), m.cepstrum.end(), row.begin() + 1);
      row[kLogF0] = std::log(f);
      row[kVf] = m.vf_hz / (sr / 2.0);
      row[kUv] = m.voiced ? 1.0 : 0.0;
    }
  }

  // Waveform.
  std::vector<double> offsets(kMaxHarmonics);
  for (double& o : offsets) o = rng.uniform(0.0, kTwoPi);
  std::vector<double>& x = u.waveform.samples;
  x.assign(total * kStride, 0.0);
  u.waveform.sample_rate = spec.sample_rate;
  double phase = 0.0;
  std::vector<double> hist;  // all-pole filter memory, most recent first
  std::vector<double> amp;
  for (t = 0; t < total; ++t) {
    const std::size_t k = phone_of[t];
    const PhoneModel& m = inventory[u.phones[k].phone];
    const double c0 = u.acoustic.at(t, 0);
    double* out = x.data() + t * kStride;
    if (m.voiced) {
      hist.clear();
      const double fa = f0[t];
      const double fb = t + 1 < total && u.acoustic.at(t + 1, kUv) > 0.5 ? f0[t + 1] : fa;
      amp.clear();
      for (std::size_t h = 1; h < kMaxHarmonics && h * fa < m.vf_hz; ++h) {
        amp.push_back(std::exp(log_envelope(c0, m.cepstrum, kTwoPi * h * fa / sr)));
      }
      for (std::size_t s = 0; s < kStride; ++s) {
        const double f = fa + (fb - fa) * static_cast<double>(s) / kStride;
        phase = std::fmod(phase + kTwoPi * f / sr, kTwoPi);
        double v = 0.0;
        for (std::size_t h = 0; h < amp.size(); ++h) v += amp[h] * std::cos((h + 1) * phase + offsets[h + 1]);
        out[s] = v + spec.noise_floor * rng.normal();
      }
    } else {
      if (t == 0 || phone_of[t - 1] != k) hist.assign(m.ar.size(), 0.0);
      const double g = std::exp(c0);
      for (std::size_t s = 0; s < kStride; ++s) {
        double v = g * rng.normal();
        for (std::size_t i = 0; i < m.ar.size(); ++i) v -= m.ar[i] * hist[i];
        if (!hist.empty()) {
          std::rotate(hist.rbegin(), hist.rbegin() + 1, hist.rend());
          hist[0] = v;
        }
        out[s] = v;
      }
    }
  }
  // Stored waveforms are 16-bit, so snap to that grid here as well.
  for (double& v : x) v = std::round(std::clamp(v, -1.0, 1.0) * 32767.0) / 32767.0;
  return u;
}

}  // namespace

void SynthSpec::validate() const {
  const std::size_t longest = std::max(voiced_max, unvoiced_max);
  if (utterances < 3) throw ConfigError("corpus.utterances must be >= 3");
  if (phones < 4) throw ConfigError("corpus.phones must be >= 4");
  if (min_frames > max_frames) throw ConfigError("corpus.min_frames > corpus.max_frames");
  if (voiced_min == 0 || unvoiced_min == 0 || silence_min == 0 || voiced_min > voiced_max ||
      unvoiced_min > unvoiced_max || silence_min > silence_max) {
    throw ConfigError("corpus: phone duration ranges must be non-empty and positive");
  }
  if (min_frames <= silence_max + 2 * longest + silence_min) {
    throw ConfigError("corpus.min_frames too small to hold one phone between silences");
  }
  if (!(f0_min > 0.0) || f0_min >= f0_max) throw ConfigError("corpus: need 0 < f0_min < f0_max");
  if (noise_floor < 0.0 || !(silence_level > 0.0)) {
    throw ConfigError("corpus: noise levels must be non-negative and silence_level positive");
  }
  if (sample_rate < 8000) throw ConfigError("corpus.sample_rate must be >= 8000");
}

double log_envelope(double c0, const std::vector<double>& cepstrum, double omega) {
  double v = c0;
  for (std::size_t n = 0; n < cepstrum.size(); ++n) v += 2.0 * cepstrum[n] * std::cos((n + 1) * omega);
  return v;
}

std::vector<PhoneModel> phone_inventory(const SynthSpec& spec) {
  Rng rng(mix_seed(spec.seed, 0x9e0e5));
  const double sr = spec.sample_rate;
  const std::size_t voiced = static_cast<std::size_t>(std::lround(2.0 * (spec.phones - 1) / 3.0));
  std::vector<PhoneModel> out;

  PhoneModel silence;
  silence.gain = spec.silence_level;
  silence.cepstrum.assign(kCepstra - 1, 0.0);
  out.push_back(silence);

  for (std::size_t p = 1; p < spec.phones; ++p) {
    if (p <= voiced) {
      const double f1 = rng.uniform(300.0, 900.0);
      const double f2 = rng.uniform(f1 + 400.0, 2600.0);
      PhoneModel m = all_pole({{f1, rng.uniform(0.85, 0.95)}, {f2, rng.uniform(0.80, 0.92)}}, sr);
      m.voiced = true;
      m.vf_hz = rng.uniform(2500.0, 5000.0);
      const double target = rng.uniform(0.08, 0.2);
      m.gain = target / harmonic_rms(m, std::sqrt(spec.f0_min * spec.f0_max), sr);
      out.push_back(std::move(m));
    } else {
      const double f_hi = rng.uniform(2000.0, 5500.0);
      const double f_lo = rng.uniform(500.0, 1500.0);
      PhoneModel m = all_pole({{f_hi, rng.uniform(0.7, 0.9)}, {f_lo, rng.uniform(0.5, 0.7)}}, sr);
      const double target = rng.uniform(0.02, 0.06);
      m.gain = target / std::sqrt(impulse_energy(m.ar));
      out.push_back(std::move(m));
    }
  }
  return out;
}

Corpus generate_corpus(const SynthSpec& spec) {
  spec.validate();
  const std::vector<PhoneModel> inventory = phone_inventory(spec);
  Corpus corpus;
  corpus.layout = LabelLayout{spec.phones, 4};
  for (std::size_t i = 0; i < spec.utterances; ++i) {
    corpus.utterances.push_back(make_utterance(spec, inventory, i));
  }

  std::vector<std::size_t> order(spec.utterances);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(spec.seed, 0x5b1d));
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  const auto n = static_cast<double>(spec.utterances);
  const auto n_train = static_cast<std::size_t>(std::lround(0.8 * n));
  const auto n_valid = static_cast<std::size_t>(std::lround(0.1 * n));
  for (std::size_t r = 0; r < order.size(); ++r) {
    corpus.utterances[order[r]].split =
        r < n_train ? Split::Train : (r < n_train + n_valid ? Split::Valid : Split::Test);
  }
  corpus.stats = compute_stats(corpus);
  return corpus;
}

}  // namespace lvtts::features
