#include "lvtts/config/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lvtts/errors.hpp"
#include "lvtts/features/acoustic.hpp"
#include "lvtts/features/linguistic.hpp"
#include "lvtts/rng.hpp"
#include "lvtts/trainer/optim.hpp"

namespace lvtts::config {

namespace {

struct Default {
  const char* key;
  const char* value;
};

// Declaration order is the order of the resolved file.
const Default kDefaults[] = {
    {"experiment.seed", "1"},

    {"corpus.utterances", "100"},
    {"corpus.min_frames", "150"},
    {"corpus.max_frames", "300"},
    {"corpus.phones", "14"},
    {"corpus.f0_min", "90"},
    {"corpus.f0_max", "180"},
    {"corpus.voiced_min", "6"},
    {"corpus.voiced_max", "14"},
    {"corpus.unvoiced_min", "4"},
    {"corpus.unvoiced_max", "10"},
    {"corpus.silence_min", "6"},
    {"corpus.silence_max", "16"},
    {"corpus.noise_floor", "0.0005"},
    {"corpus.silence_level", "0.0003"},
    {"corpus.sample_rate", "16000"},

    {"decoder.arch", "salad"},
    {"decoder.embed", "32"},
    {"decoder.hidden", "64"},
    {"decoder.blocks", "2"},
    {"decoder.heads", "2"},
    {"decoder.d_ff", "128"},
    {"decoder.attn_dropout", "0.1"},
    {"decoder.ffn_dropout", "0.5"},
    {"decoder.pos_dropout", "0.5"},
    {"decoder.rnn_dropout", "0.5"},

    {"decoder_train.lanes", "8"},
    {"decoder_train.window", "120"},
    {"decoder_train.max_epochs", "60"},
    {"decoder_train.patience", "20"},
    {"decoder_train.optimizer", "adam"},
    {"decoder_train.schedule", "auto"},
    {"decoder_train.lr", "0.001"},
    {"decoder_train.warmup", "400"},
    {"decoder_train.clip", "0"},

    {"codec.bits", "8"},

    {"vocoder.fs_top", "16"},
    {"vocoder.fs_mid", "4"},
    {"vocoder.hidden", "48"},

    {"vocoder_train.mode", "inv"},
    {"vocoder_train.lanes", "8"},
    {"vocoder_train.window", "320"},
    {"vocoder_train.max_epochs", "2"},
    {"vocoder_train.patience", "5"},
    {"vocoder_train.optimizer", "adam"},
    {"vocoder_train.schedule", "constant"},
    {"vocoder_train.lr", "0.001"},
    {"vocoder_train.clip", "0"},
    {"vocoder_train.eval_window", "1600"},
    {"vocoder_train.joint_epochs", "1"},
    {"vocoder_train.joint_lr", "0.0002"},
    {"vocoder_train.joint_decoder_lr", "0.0001"},

    {"faults.mismatched_normalization", "false"},

    {"synthesize.temperature", "1"},
    {"synthesize.utterances", "2"},

    {"evaluate.hist_bins", "40"},
    {"evaluate.hist_lo_hz", "50"},
    {"evaluate.hist_hi_hz", "300"},

    {"benchmark.lengths", "2,4,6,8,10,12,14,16,18,20"},
    {"benchmark.repetitions", "3"},
    {"benchmark.vocoder", "false"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string section_of(const std::string& key) { return key.substr(0, key.find('.')); }

}  // namespace

Config::Config() {
  for (const Default& d : kDefaults) {
    order_.push_back(d.key);
    values_[d.key] = d.value;
  }
}

void Config::set(const std::string& dotted_key, const std::string& value) {
  auto it = values_.find(dotted_key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + dotted_key + "'");
  it->second = value;
}

const std::string& Config::get(const std::string& dotted_key) const {
  auto it = values_.find(dotted_key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + dotted_key + "'");
  return it->second;
}

void Config::parse_text(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const std::string& k : order_) known = known || section_of(k) == section;
      if (!known) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of a section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (!values_.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    values_[key] = trim(line.substr(eq + 1));
  }
}

void Config::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  parse_text(ss.str(), path.string());
}

void Config::apply_override(const std::string& arg) {
  std::string s = arg;
  while (!s.empty() && s.front() == '-') s.erase(0, 1);
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + arg + "' is not of the form --section.key=value");
  set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno != 0) throw ConfigError(key + ": '" + v + "' is not an integer");
  return x;
}

std::size_t Config::get_size(const std::string& key) const {
  const std::int64_t x = get_int(key);
  if (x < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::size_t>(x);
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) throw ConfigError(key + ": '" + v + "' is not a number");
  return x;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw ConfigError(key + ": '" + item + "' is not a number");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError(key + " is empty");
  return out;
}

std::string Config::resolved() const {
  std::ostringstream os;
  std::string section;
  for (const std::string& key : order_) {
    const std::string s = section_of(key);
    if (s != section) {
      if (!section.empty()) os << '\n';
      os << '[' << s << "]\n";
      section = s;
    }
    os << key.substr(s.size() + 1) << " = " << values_.at(key) << '\n';
  }
  return os.str();
}

void Config::write_resolved(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << resolved();
}

void apply_env(Config& cfg) {
  if (const char* s = std::getenv("LV_SEED")) cfg.set("experiment.seed", s);
}

ExperimentConfig typed(const Config& c) {
  ExperimentConfig x;
  x.seed = static_cast<std::uint64_t>(c.get_size("experiment.seed"));

  features::SynthSpec& s = x.corpus;
  s.utterances = c.get_size("corpus.utterances");
  s.min_frames = c.get_size("corpus.min_frames");
  s.max_frames = c.get_size("corpus.max_frames");
  s.phones = c.get_size("corpus.phones");
  s.f0_min = c.get_double("corpus.f0_min");
  s.f0_max = c.get_double("corpus.f0_max");
  s.voiced_min = c.get_size("corpus.voiced_min");
  s.voiced_max = c.get_size("corpus.voiced_max");
  s.unvoiced_min = c.get_size("corpus.unvoiced_min");
  s.unvoiced_max = c.get_size("corpus.unvoiced_max");
  s.silence_min = c.get_size("corpus.silence_min");
  s.silence_max = c.get_size("corpus.silence_max");
  s.noise_floor = c.get_double("corpus.noise_floor");
  s.silence_level = c.get_double("corpus.silence_level");
  s.sample_rate = static_cast<std::uint32_t>(c.get_size("corpus.sample_rate"));
  s.seed = mix_seed(x.seed, 1);
  s.validate();

  decoder::DecoderConfig& d = x.decoder;
  d.arch = decoder::parse_arch(c.get("decoder.arch"));
  d.in_dim = features::LabelLayout{s.phones}.frame_dim();
  d.embed = c.get_size("decoder.embed");
  d.hidden = c.get_size("decoder.hidden");
  d.blocks = c.get_size("decoder.blocks");
  d.heads = c.get_size("decoder.heads");
  d.d_ff = c.get_size("decoder.d_ff");
  d.attn_dropout = c.get_double("decoder.attn_dropout");
  d.ffn_dropout = c.get_double("decoder.ffn_dropout");
  d.pos_dropout = c.get_double("decoder.pos_dropout");
  d.rnn_dropout = c.get_double("decoder.rnn_dropout");
  d.validate();

  trainer::DecoderTrainConfig& dt = x.decoder_train;
  dt.lanes = c.get_size("decoder_train.lanes");
  dt.window = c.get_size("decoder_train.window");
  dt.max_epochs = c.get_size("decoder_train.max_epochs");
  dt.patience = c.get_size("decoder_train.patience");
  dt.optimizer = trainer::parse_optimizer(c.get("decoder_train.optimizer"));
  const std::string sched = c.get("decoder_train.schedule");
  if (sched == "auto") {
    dt.schedule = d.arch == decoder::Arch::Salad ? trainer::Schedule::Noam : trainer::Schedule::Constant;
  } else {
    dt.schedule = trainer::parse_schedule(sched);
  }
  dt.lr = c.get_double("decoder_train.lr");
  dt.warmup = c.get_size("decoder_train.warmup");
  dt.clip = c.get_double("decoder_train.clip");
  dt.seed = mix_seed(x.seed, 2);
  if (dt.lanes == 0 || dt.window == 0 || dt.warmup == 0) {
    throw ConfigError("decoder_train.lanes, window and warmup must be positive");
  }
  if (dt.patience == 0) throw ConfigError("decoder_train.patience must be positive");

  x.codec.bits = static_cast<int>(c.get_size("codec.bits"));
  if (x.codec.bits < 1 || x.codec.bits > 16) throw ConfigError("codec.bits must be in 1..16");
  x.codec.levels = 1 << x.codec.bits;
  x.codec.validate();

  vocoder::TierConfig& v = x.vocoder;
  v.fs_top = c.get_size("vocoder.fs_top");
  v.fs_mid = c.get_size("vocoder.fs_mid");
  v.hidden = c.get_size("vocoder.hidden");
  v.levels = x.codec.levels;
  v.cond_dim = features::kAcousticDim;
  v.frame_stride = features::kStride;
  v.validate();

  trainer::VocoderTrainConfig& vt = x.vocoder_train;
  vt.mode = trainer::parse_coupling(c.get("vocoder_train.mode"));
  vt.lanes = c.get_size("vocoder_train.lanes");
  vt.window = c.get_size("vocoder_train.window");
  vt.max_epochs = c.get_size("vocoder_train.max_epochs");
  vt.patience = c.get_size("vocoder_train.patience");
  vt.optimizer = trainer::parse_optimizer(c.get("vocoder_train.optimizer"));
  vt.schedule = trainer::parse_schedule(c.get("vocoder_train.schedule"));
  if (vt.schedule == trainer::Schedule::Noam) throw ConfigError("vocoder_train.schedule must be constant or step");
  vt.lr = c.get_double("vocoder_train.lr");
  vt.clip = c.get_double("vocoder_train.clip");
  vt.eval_window = c.get_size("vocoder_train.eval_window");
  vt.joint_epochs = c.get_size("vocoder_train.joint_epochs");
  vt.joint_lr = c.get_double("vocoder_train.joint_lr");
  vt.joint_decoder_lr = c.get_double("vocoder_train.joint_decoder_lr");
  vt.mismatched_normalization = c.get_bool("faults.mismatched_normalization");
  vt.seed = mix_seed(x.seed, 3);
  if (vt.lanes == 0 || vt.patience == 0) throw ConfigError("vocoder_train.lanes and patience must be positive");
  for (std::size_t w : {vt.window, vt.eval_window}) {
    if (w == 0 || w % v.fs_top != 0) throw ConfigError("vocoder_train windows must be positive multiples of fs_top");
  }

  x.temperature = c.get_double("synthesize.temperature");
  if (x.temperature < 0.0) throw ConfigError("synthesize.temperature must be >= 0");
  x.synth_utterances = c.get_size("synthesize.utterances");

  x.hist_bins = c.get_size("evaluate.hist_bins");
  x.hist_lo_hz = c.get_double("evaluate.hist_lo_hz");
  x.hist_hi_hz = c.get_double("evaluate.hist_hi_hz");
  if (x.hist_bins == 0 || !(x.hist_hi_hz > x.hist_lo_hz)) throw ConfigError("evaluate histogram range is empty");

  x.bench.lengths_s = c.get_list("benchmark.lengths");
  for (double l : x.bench.lengths_s) {
    if (!(l > 0.0)) throw ConfigError("benchmark.lengths must be positive");
  }
  x.bench.repetitions = c.get_size("benchmark.repetitions");
  x.bench.sample_rate = s.sample_rate;
  x.bench.seed = mix_seed(x.seed, 5);
  x.bench_vocoder = c.get_bool("benchmark.vocoder");
  return x;
}

}  // namespace lvtts::config
