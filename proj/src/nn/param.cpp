#include "lvtts/nn/param.hpp"

#include <cmath>

#include "lvtts/errors.hpp"

namespace lvtts::nn {

Param::Param(std::string name_, Shape shape)
    : name(std::move(name_)), value(shape, 0.0), grad(shape, 0.0) {}

void zero_grads(const ParamList& params) {
  for (Param* p : params) p->zero_grad();
}

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const Param* p : params) n += p->value.size();
  return n;
}

double grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const Param* p : params) {
    for (double g : p->grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

void clip_grad_norm(const ParamList& params, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = grad_norm(params);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (Param* p : params) p->grad *= scale;
}

void copy_values(const ParamList& from, const ParamList& to) {
  if (from.size() != to.size()) throw DimensionError("copy_values: parameter lists differ");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i]->value.shape() != to[i]->value.shape()) {
      throw DimensionError("copy_values: " + from[i]->name + " " +
                           shape_string(from[i]->value.shape()) + " vs " +
                           shape_string(to[i]->value.shape()));
    }
    to[i]->value = from[i]->value;
  }
}

void add_grads(const ParamList& from, const ParamList& to) {
  if (from.size() != to.size()) throw DimensionError("add_grads: parameter lists differ");
  for (std::size_t i = 0; i < from.size(); ++i) to[i]->grad += from[i]->grad;
}

void xavier_uniform(Param& p, Rng& rng) {
  const Shape& s = p.value.shape();
  if (s.size() < 2) {
    p.value.fill(0.0);
    return;
  }
  const std::size_t receptive = s.size() == 3 ? s[2] : 1;
  const double fan_out = static_cast<double>(s[0] * receptive);
  const double fan_in = static_cast<double>(s[1] * receptive);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : p.value.values()) v = rng.uniform(-bound, bound);
}

}  // namespace lvtts::nn
