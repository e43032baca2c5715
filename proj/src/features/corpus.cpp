#include "lvtts/features/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lvtts/binary_io.hpp"
#include "lvtts/errors.hpp"

namespace lvtts::features {

namespace fs = std::filesystem;

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError(where + ": bad number '" + s + "'");
}

std::size_t parse_count(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError(where + ": bad count '" + s + "'");
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) out.push_back(field);
  return out;
}

std::string phone_string(const std::vector<PhoneSegment>& phones) {
  std::string s;
  for (const PhoneSegment& p : phones) {
    if (!s.empty()) s += ' ';
    s += std::to_string(p.phone) + ':' + std::to_string(p.duration);
  }
  return s;
}

std::vector<PhoneSegment> parse_phones(const std::string& s, const std::string& where) {
  std::vector<PhoneSegment> out;
  std::stringstream ss(s);
  std::string tok;
  while (ss >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw FormatError(where + ": bad phone token '" + tok + "'");
    out.push_back({parse_count(tok.substr(0, colon), where), parse_count(tok.substr(colon + 1), where)});
  }
  return out;
}

}  // namespace

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  throw FormatError("unknown split '" + name + "'");
}

std::vector<const Utterance*> Corpus::split(Split s) const {
  std::vector<const Utterance*> out;
  for (const Utterance& u : utterances) {
    if (u.split == s) out.push_back(&u);
  }
  return out;
}

const Utterance& Corpus::find(const std::string& id) const {
  for (const Utterance& u : utterances) {
    if (u.id == id) return u;
  }
  throw PreconditionError("no utterance '" + id + "' in corpus");
}

Tensor Corpus::normalized_acoustic(const Utterance& u) const { return normalize_acoustic(u.acoustic, stats.acoustic); }

Tensor Corpus::linguistic(const Utterance& u) const {
  return replicate_labels(u.phones, normalize_labels(u.phone_labels, stats.labels, layout), u.frames(),
                          stats.labels.max_duration);
}

CorpusStats compute_stats(const Corpus& corpus) {
  std::vector<const Tensor*> acoustic;
  std::vector<const std::vector<PhoneSegment>*> phones;
  std::vector<const Tensor*> labels;
  CorpusStats s;
  for (const Utterance* u : corpus.split(Split::Train)) {
    acoustic.push_back(&u->acoustic);
    phones.push_back(&u->phones);
    labels.push_back(&u->phone_labels);
    s.sources.push_back(u->id);
  }
  if (acoustic.empty()) throw PreconditionError("corpus has no training utterances");
  s.acoustic = fit_min_max(acoustic);
  s.labels = fit_label_stats(phones, labels, corpus.layout);
  return s;
}

void check_provenance(const Corpus& corpus) {
  if (corpus.stats.sources.empty()) throw PreconditionError("normalization stats carry no provenance");
  for (const std::string& id : corpus.stats.sources) {
    if (corpus.find(id).split != Split::Train) {
      throw PreconditionError("normalization stats were fitted on non-training utterance " + id);
    }
  }
}

std::vector<double> raw_log_f0(const Tensor& acoustic) {
  std::vector<double> out(acoustic.rows());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = acoustic.at(t, kUv) >= 0.5 ? acoustic.at(t, kLogF0) : kUnvoicedLogF0;
  }
  return out;
}

void write_features(const fs::path& path, const Tensor& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  io::write_magic(os, "LVFT1");
  io::write_u32(os, static_cast<std::uint32_t>(m.rows()));
  io::write_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.storage()) io::write_f64(os, v);
  if (!os) throw Error("write failed: " + path.string());
}

Tensor read_features(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot read " + path.string());
  io::expect_magic(is, "LVFT1", path.string());
  const std::uint32_t rows = io::read_u32(is);
  const std::uint32_t cols = io::read_u32(is);
  Tensor m = Tensor::matrix(rows, cols);
  for (double& v : m.storage()) v = io::read_f64(is);
  return m;
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.tsv");
  manifest << "id\tsplit\tframes\tphones\n";
  for (const Utterance& u : corpus.utterances) {
    manifest << u.id << '\t' << split_name(u.split) << '\t' << u.frames() << '\t' << phone_string(u.phones) << '\n';
    codec::write_waveform(dir / (u.id + ".lvwv"), u.waveform);
    write_features(dir / (u.id + ".acoustic.lvft"), u.acoustic);
    write_features(dir / (u.id + ".labels.lvft"), u.phone_labels);
  }

  std::ofstream stats(dir / "stats.tsv");
  stats << "key\tindex\tvalue\n";
  stats << "layout_phones\t0\t" << corpus.layout.phones << '\n';
  stats << "layout_prosodic\t0\t" << corpus.layout.prosodic << '\n';
  const CorpusStats& s = corpus.stats;
  auto emit = [&](const char* key, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) stats << key << '\t' << i << '\t' << format_real(v[i]) << '\n';
  };
  emit("acoustic_min", s.acoustic.min);
  emit("acoustic_max", s.acoustic.max);
  emit("label_mean", s.labels.mean);
  emit("label_std", s.labels.stddev);
  stats << "max_duration\t0\t" << format_real(s.labels.max_duration) << '\n';
  for (std::size_t i = 0; i < s.sources.size(); ++i) stats << "source\t" << i << '\t' << s.sources[i] << '\n';
  if (!manifest || !stats) throw Error("failed writing corpus to " + dir.string());
}

Corpus load_corpus(const fs::path& dir) {
  Corpus corpus;
  std::ifstream stats(dir / "stats.tsv");
  if (!stats) throw PreconditionError("no corpus at " + dir.string() + " (missing stats.tsv)");
  std::map<std::string, std::vector<std::string>> fields;
  std::string line;
  std::getline(stats, line);
  while (std::getline(stats, line)) {
    const auto f = split_tabs(line);
    if (f.size() != 3) throw FormatError("stats.tsv: malformed line '" + line + "'");
    auto& slot = fields[f[0]];
    const std::size_t idx = parse_count(f[1], "stats.tsv");
    if (slot.size() <= idx) slot.resize(idx + 1);
    slot[idx] = f[2];
  }
  auto reals = [&](const std::string& key) {
    std::vector<double> v;
    for (const std::string& s : fields[key]) v.push_back(parse_real(s, "stats.tsv " + key));
    return v;
  };
  if (fields["layout_phones"].empty() || fields["max_duration"].empty()) {
    throw FormatError("stats.tsv: missing layout or duration entries");
  }
  corpus.layout.phones = parse_count(fields["layout_phones"][0], "stats.tsv");
  corpus.layout.prosodic = parse_count(fields["layout_prosodic"][0], "stats.tsv");
  corpus.stats.acoustic = {reals("acoustic_min"), reals("acoustic_max")};
  corpus.stats.labels = {reals("label_mean"), reals("label_std"), reals("max_duration")[0]};
  corpus.stats.sources = fields["source"];

  std::ifstream manifest(dir / "manifest.tsv");
  if (!manifest) throw FormatError("missing " + (dir / "manifest.tsv").string());
  std::getline(manifest, line);
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) throw FormatError("manifest.tsv: malformed line '" + line + "'");
    Utterance u;
    u.id = f[0];
    u.split = parse_split(f[1]);
    u.phones = parse_phones(f[3], "manifest.tsv " + u.id);
    u.waveform = codec::read_waveform(dir / (u.id + ".lvwv"));
    u.acoustic = read_features(dir / (u.id + ".acoustic.lvft"));
    u.phone_labels = read_features(dir / (u.id + ".labels.lvft"));
    if (u.frames() != parse_count(f[2], "manifest.tsv")) {
      throw FormatError("manifest.tsv: frame count mismatch for " + u.id);
    }
    corpus.utterances.push_back(std::move(u));
  }
  return corpus;
}

}  // namespace lvtts::features
