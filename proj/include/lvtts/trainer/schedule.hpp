#pragma once

#include <cstddef>

namespace lvtts::trainer {

// 1e-3 before epoch 15, 1e-4 until epoch 35, 1e-5 from then on.
double step_lr(std::size_t epoch);

// H^-0.5 * min(s^-0.5, s * w^-1.5). Throws DomainError for s == 0.
double noam_lr(std::size_t step, std::size_t width, std::size_t warmup);

}  // namespace lvtts::trainer
