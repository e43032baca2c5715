#include "lvtts/trainer/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "lvtts/errors.hpp"

namespace lvtts::trainer {

double step_lr(std::size_t epoch) {
  if (epoch < 15) return 1e-3;
  if (epoch < 35) return 1e-4;
  return 1e-5;
}

double noam_lr(std::size_t step, std::size_t width, std::size_t warmup) {
  if (step == 0) throw DomainError("noam_lr: step counter starts at 1");
  if (width == 0 || warmup == 0) throw DomainError("noam_lr: width and warmup must be positive");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return std::pow(static_cast<double>(width), -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

}  // namespace lvtts::trainer
