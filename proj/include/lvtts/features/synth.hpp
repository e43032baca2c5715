#pragma once

#include <cstdint>
#include <vector>

#include "lvtts/features/corpus.hpp"

namespace lvtts::features {

struct SynthSpec {
  std::size_t utterances = 100;
  std::size_t min_frames = 150;
  std::size_t max_frames = 300;
  std::size_t phones = 14;  // phone 0 is silence
  double f0_min = 90.0;     // range of the per-utterance base pitch, Hz
  double f0_max = 180.0;
  std::size_t voiced_min = 6;
  std::size_t voiced_max = 14;
  std::size_t unvoiced_min = 4;
  std::size_t unvoiced_max = 10;
  std::size_t silence_min = 6;
  std::size_t silence_max = 16;
  double noise_floor = 5e-4;    // white noise added under voiced frames
  double silence_level = 3e-4;  // rms of silence
  std::uint32_t sample_rate = 16000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Spectral model of one phone. Unvoiced phones are driven by white noise
// through an all-pole filter; voiced phones are harmonic series weighted by
// the envelope below the voicing frequency.
struct PhoneModel {
  bool voiced = false;
  double gain = 1.0;
  std::vector<double> cepstrum;  // c1..c39 of the unit-gain envelope
  std::vector<double> ar;        // a1..ap, A(z) = 1 + sum a_i z^-i
  double vf_hz = 0.0;
};

std::vector<PhoneModel> phone_inventory(const SynthSpec& spec);

// log |H(w)| = c0 + 2 sum_n c_n cos(n w), truncated to the stored cepstrum.
double log_envelope(double c0, const std::vector<double>& cepstrum, double omega);

Corpus generate_corpus(const SynthSpec& spec);

}  // namespace lvtts::features
