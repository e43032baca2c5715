#pragma once

#include "lvtts/rng.hpp"
#include "lvtts/tensor.hpp"

namespace lvtts::nn {

struct DropoutSpec {
  double rate = 0.0;    // in [0, 1)
  bool active = false;  // false at inference
};

// Inverted dropout. With an inactive spec or rate 0 the input is returned
// unchanged and mask is left empty. Otherwise mask holds 0 or 1/(1-p).
Tensor dropout_forward(const Tensor& x, const DropoutSpec& spec, Rng& rng, Tensor* mask);
Tensor dropout_backward(const Tensor& dy, const Tensor& mask);

}  // namespace lvtts::nn
