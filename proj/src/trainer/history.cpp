#include <fstream>

#include "lvtts/errors.hpp"
#include "lvtts/eval/metrics.hpp"
#include "lvtts/trainer/train.hpp"

namespace lvtts::trainer {

void History::add(std::size_t epoch, std::string split, std::string metric, double value) {
  rows.push_back({epoch, std::move(split), std::move(metric), value});
}

double History::last(const std::string& split, const std::string& metric) const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->split == split && it->metric == metric) return it->value;
  }
  throw Error("history has no " + split + "/" + metric + " entry");
}

std::vector<double> History::series(const std::string& split, const std::string& metric) const {
  std::vector<double> out;
  for (const HistoryRow& r : rows) {
    if (r.split == split && r.metric == metric) out.push_back(r.value);
  }
  return out;
}

void write_history_tsv(const std::filesystem::path& path, const History& history) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "epoch\tsplit\tmetric\tvalue\n";
  for (const HistoryRow& r : history.rows) {
    os << r.epoch << '\t' << r.split << '\t' << r.metric << '\t' << eval::format_real(r.value) << '\n';
  }
}

Schedule parse_schedule(const std::string& name) {
  if (name == "constant") return Schedule::Constant;
  if (name == "step") return Schedule::Step;
  if (name == "noam") return Schedule::Noam;
  throw ConfigError("unknown schedule '" + name + "' (expected constant, step or noam)");
}

std::string schedule_name(Schedule s) {
  switch (s) {
    case Schedule::Constant: return "constant";
    case Schedule::Step: return "step";
    case Schedule::Noam: return "noam";
  }
  return "?";
}

CouplingMode parse_coupling(const std::string& name) {
  if (name == "inv") return CouplingMode::Inv;
  if (name == "imnv") return CouplingMode::Imnv;
  if (name == "imnv_pretrained") return CouplingMode::ImnvPretrained;
  if (name == "jmnv") return CouplingMode::Jmnv;
  throw ConfigError("unknown coupling mode '" + name + "' (expected inv, imnv, imnv_pretrained or jmnv)");
}

std::string coupling_name(CouplingMode m) {
  switch (m) {
    case CouplingMode::Inv: return "inv";
    case CouplingMode::Imnv: return "imnv";
    case CouplingMode::ImnvPretrained: return "imnv_pretrained";
    case CouplingMode::Jmnv: return "jmnv";
  }
  return "?";
}

}  // namespace lvtts::trainer
