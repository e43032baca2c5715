#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lvtts/nn/param.hpp"

namespace lvtts::trainer {

enum class OptimizerKind { Adam, RMSprop };

OptimizerKind parse_optimizer(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;    // Adam
  double beta2 = 0.999;  // Adam
  double alpha = 0.99;   // RMSprop decay
  double eps = 1e-8;
};

// Update rules follow the PyTorch definitions (Adam with bias correction,
// RMSprop without momentum or centring). Accumulators are bound to the
// parameter list given at construction.
class Optimizer {
 public:
  Optimizer(const nn::ParamList& params, const OptimizerConfig& cfg);

  void step(double lr);
  std::size_t steps() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  nn::ParamList params_;
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

}  // namespace lvtts::trainer
