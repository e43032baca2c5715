#pragma once

#include <string>
#include <vector>

#include "lvtts/rng.hpp"
#include "lvtts/tensor.hpp"

namespace lvtts::nn {

// A trainable tensor and its accumulated gradient. Layers own their params by
// value; a ParamList is a view rebuilt on demand, so never keep one across a
// copy or move of the owning model.
struct Param {
  Param() = default;
  Param(std::string name, Shape shape);

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

using ParamList = std::vector<Param*>;

void zero_grads(const ParamList& params);
std::size_t parameter_count(const ParamList& params);
double grad_norm(const ParamList& params);
void clip_grad_norm(const ParamList& params, double max_norm);
void copy_values(const ParamList& from, const ParamList& to);
void add_grads(const ParamList& from, const ParamList& to);

// Uniform in +-sqrt(6 / (fan_in + fan_out)). Matrices are (out x in), conv
// kernels (out x in x k).
void xavier_uniform(Param& p, Rng& rng);

}  // namespace lvtts::nn
