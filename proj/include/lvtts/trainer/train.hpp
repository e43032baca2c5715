#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lvtts/decoder/decoder.hpp"
#include "lvtts/features/corpus.hpp"
#include "lvtts/trainer/optim.hpp"
#include "lvtts/vocoder/model.hpp"

namespace lvtts::trainer {

struct HistoryRow {
  std::size_t epoch = 0;
  std::string split;
  std::string metric;
  double value = 0.0;
};

struct History {
  std::vector<HistoryRow> rows;
  void add(std::size_t epoch, std::string split, std::string metric, double value);
  // Last value recorded for (split, metric); throws if absent.
  double last(const std::string& split, const std::string& metric) const;
  std::vector<double> series(const std::string& split, const std::string& metric) const;
};

// Columns: epoch, split, metric, value.
void write_history_tsv(const std::filesystem::path& path, const History& history);

enum class Schedule { Constant, Step, Noam };
Schedule parse_schedule(const std::string& name);
std::string schedule_name(Schedule s);

struct DecoderTrainConfig {
  std::size_t lanes = 8;
  std::size_t window = 120;
  std::size_t max_epochs = 40;
  std::size_t patience = 20;
  OptimizerKind optimizer = OptimizerKind::Adam;
  Schedule schedule = Schedule::Constant;
  double lr = 1e-3;            // constant and step schedules
  std::size_t warmup = 4000;   // noam
  double clip = 0.0;           // gradient norm limit, 0 disables
  std::uint64_t seed = 1;
};

struct DecoderTrainResult {
  decoder::Decoder model;
  History history;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_valid_mcd = 0.0;
};

// Stateful training on the concatenated training stream; validation MCD
// drives early stopping and the best weights are returned.
DecoderTrainResult train_decoder(const decoder::DecoderConfig& model_cfg, const DecoderTrainConfig& cfg,
                                 const features::Corpus& corpus);

enum class CouplingMode { Inv, Imnv, ImnvPretrained, Jmnv };
CouplingMode parse_coupling(const std::string& name);
std::string coupling_name(CouplingMode m);

struct VocoderTrainConfig {
  CouplingMode mode = CouplingMode::Inv;
  std::size_t lanes = 8;
  std::size_t window = 320;  // samples per truncated backprop window
  std::size_t max_epochs = 2;
  std::size_t patience = 5;
  OptimizerKind optimizer = OptimizerKind::Adam;
  Schedule schedule = Schedule::Constant;
  double lr = 1e-3;
  double clip = 0.0;
  std::size_t eval_window = 1600;
  // joint stage
  std::size_t joint_epochs = 1;
  double joint_lr = 2e-4;
  double joint_decoder_lr = 1e-4;
  // Feeds denormalized decoder output to the vocoder, a deliberate fault.
  bool mismatched_normalization = false;
  std::uint64_t seed = 1;
};

struct VocoderTrainResult {
  vocoder::VocoderModel model;
  std::optional<decoder::Decoder> decoder;  // updated decoder after the joint stage
  History history;
  double train_nll_before = 0.0;  // joint stage only
  double train_nll_after = 0.0;
};

// Conditioning for one utterance under a coupling mode: ground truth for INV,
// decoder predictions otherwise.
Tensor conditioning(const features::Corpus& corpus, const features::Utterance& u, CouplingMode mode,
                    const decoder::Decoder* decoder, bool mismatched_normalization = false);

std::vector<int> sample_classes(const features::Utterance& u, const codec::CodecConfig& codec = {});

// Mean teacher-forced NLL over a split, nats/sample.
double vocoder_nll(const features::Corpus& corpus, features::Split split, const vocoder::VocoderModel& model,
                   CouplingMode mode, const decoder::Decoder* decoder, std::size_t window,
                   bool mismatched_normalization = false);

// IMNV modes need `decoder`, IMNV_pretrained needs `init` (INV weights), JMNV
// needs both (`init` holding IMNV weights). Missing inputs raise
// PreconditionError.
VocoderTrainResult train_vocoder(const vocoder::TierConfig& model_cfg, const VocoderTrainConfig& cfg,
                                 const features::Corpus& corpus, const decoder::Decoder* decoder = nullptr,
                                 const vocoder::VocoderModel* init = nullptr);

}  // namespace lvtts::trainer
