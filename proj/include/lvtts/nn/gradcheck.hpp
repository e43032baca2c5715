#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lvtts/nn/param.hpp"

namespace lvtts::nn {

// One set of values probed by finite differences next to the gradient the
// analytic pass produced for it.
struct GradProbe {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t entries = 0;
  std::string worst;
};

// |a - n| / max(|a|, |n|, 1e-6)
double relative_error(double analytic, double numeric);

// `backprop` must run forward + backward and leave analytic gradients wherever
// the probes point. `loss` must recompute the scalar loss from current values.
GradCheckResult gradient_check(const std::function<void()>& backprop,
                               const std::function<double()>& loss,
                               std::vector<GradProbe> probes, double eps);

// Adds one probe per parameter (values vs accumulated grad).
void add_param_probes(const ParamList& params, std::vector<GradProbe>& probes);

struct LayerCheck {
  std::string layer;
  double max_relative_error = 0.0;
  std::size_t entries = 0;
};

// Randomized checks of every nn layer (linear, relu, softmax cross entropy,
// GRU, LSTM, conv, transposed conv, layer norm, attention, feed-forward).
// Each layer is checked on `seeds` independent instances; the worst error is
// reported.
std::vector<LayerCheck> check_layers(std::uint64_t base_seed, std::size_t seeds, double eps);

LayerCheck check_linear(std::uint64_t seed, double eps);
LayerCheck check_relu(std::uint64_t seed, double eps);
LayerCheck check_softmax_xent(std::uint64_t seed, double eps);
LayerCheck check_gru(std::uint64_t seed, double eps, std::size_t hidden = 4);
LayerCheck check_lstm(std::uint64_t seed, double eps);
LayerCheck check_conv1d(std::uint64_t seed, double eps);
LayerCheck check_tconv1d(std::uint64_t seed, double eps);
LayerCheck check_layer_norm(std::uint64_t seed, double eps);
LayerCheck check_attention(std::uint64_t seed, double eps, bool with_dropout = false);
LayerCheck check_feed_forward(std::uint64_t seed, double eps);

}  // namespace lvtts::nn
