#include "lvtts/trainer/optim.hpp"

#include <cmath>

#include "lvtts/errors.hpp"

namespace lvtts::trainer {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "rmsprop") return OptimizerKind::RMSprop;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or rmsprop)");
}

std::string optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "rmsprop"; }

Optimizer::Optimizer(const nn::ParamList& params, const OptimizerConfig& cfg) : params_(params), cfg_(cfg) {
  for (const nn::Param* p : params_) {
    if (p->grad.shape() != p->value.shape()) {
      throw DimensionError("optimizer: gradient of " + p->name + " is " + shape_string(p->grad.shape()) +
                           ", value is " + shape_string(p->value.shape()));
    }
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Optimizer::step(double lr) {
  ++t_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    nn::Param& p = *params_[k];
    if (p.grad.shape() != p.value.shape() || p.value.size() != m_[k].size()) {
      throw DimensionError("optimizer: parameter " + p.name + " changed shape");
    }
    double* w = p.value.data();
    const double* g = p.grad.data();
    std::vector<double>& m = m_[k];
    std::vector<double>& v = v_[k];
    if (cfg_.kind == OptimizerKind::Adam) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double denom = std::sqrt(v[i]) / std::sqrt(bc2) + cfg_.eps;
        w[i] -= lr / bc1 * m[i] / denom;
      }
    } else {
      const double a = cfg_.alpha;
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = a * v[i] + (1.0 - a) * g[i] * g[i];
        w[i] -= lr * g[i] / (std::sqrt(v[i]) + cfg_.eps);
      }
    }
  }
}

}  // namespace lvtts::trainer
