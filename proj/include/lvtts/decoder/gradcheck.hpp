#pragma once

#include <cstdint>

#include "lvtts/decoder/decoder.hpp"
#include "lvtts/nn/gradcheck.hpp"

namespace lvtts::decoder {

// Tiny decoder in train mode with frozen dropout masks; parameters and inputs
// are probed.
nn::LayerCheck check_decoder(Arch arch, std::uint64_t seed, double eps);

}  // namespace lvtts::decoder
