#pragma once

#include <cstdint>

#include "lvtts/nn/gradcheck.hpp"

namespace lvtts::vocoder {

// All three tiers composed on a tiny config: parameters and conditioning
// frames against central differences of the window cross entropy.
nn::LayerCheck check_vocoder(std::uint64_t seed, double eps);

}  // namespace lvtts::vocoder
