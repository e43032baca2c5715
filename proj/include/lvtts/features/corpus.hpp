#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lvtts/codec/waveform.hpp"
#include "lvtts/features/acoustic.hpp"
#include "lvtts/features/linguistic.hpp"
#include "lvtts/tensor.hpp"

namespace lvtts::features {

enum class Split { Train, Valid, Test };

std::string split_name(Split s);
Split parse_split(const std::string& name);

struct Utterance {
  std::string id;
  Split split = Split::Train;
  codec::Waveform waveform;
  Tensor acoustic;  // (frames x 43), log-F0 already interpolated
  std::vector<PhoneSegment> phones;
  Tensor phone_labels;  // (phones x L), prosodic columns not yet normalized

  std::size_t frames() const { return acoustic.rows(); }
};

// Normalization statistics together with the ids they were fitted on.
struct CorpusStats {
  MinMaxStats acoustic;
  LabelStats labels;
  std::vector<std::string> sources;
};

struct Corpus {
  LabelLayout layout;
  std::vector<Utterance> utterances;
  CorpusStats stats;

  std::vector<const Utterance*> split(Split s) const;
  const Utterance& find(const std::string& id) const;

  Tensor normalized_acoustic(const Utterance& u) const;
  // (frames x (L + 2)) decoder input.
  Tensor linguistic(const Utterance& u) const;
};

// Fits on the training split only.
CorpusStats compute_stats(const Corpus& corpus);
// Throws PreconditionError if the stats were fitted on anything but training data.
void check_provenance(const Corpus& corpus);

// Raw contour with the unvoiced sentinel restored.
std::vector<double> raw_log_f0(const Tensor& acoustic);

// "LVFT1", u32 rows, u32 cols, row-major f64.
void write_features(const std::filesystem::path& path, const Tensor& m);
Tensor read_features(const std::filesystem::path& path);

// manifest.tsv, stats.tsv and per-utterance .lvwv / .lvft files.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace lvtts::features
