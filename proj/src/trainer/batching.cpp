#include "lvtts/trainer/batching.hpp"

#include <string>

#include "lvtts/errors.hpp"

namespace lvtts::trainer {

BatchPlan make_batch_plan(std::size_t stream_length, std::size_t lanes, std::size_t window) {
  if (lanes == 0 || window == 0) throw ConfigError("batch plan needs positive lanes and window");
  if (stream_length < lanes * window) {
    throw PreconditionError("stream of " + std::to_string(stream_length) + " frames is shorter than one batch (" +
                            std::to_string(lanes) + " x " + std::to_string(window) + ")");
  }
  BatchPlan plan;
  plan.lanes = lanes;
  plan.window = window;
  plan.lane_length = stream_length / lanes;
  plan.batches = plan.lane_length / window;
  return plan;
}

bool EarlyStopper::observe(double metric) {
  improved_ = seen_ == 0 || metric < best_;
  if (improved_) {
    best_ = metric;
    best_index_ = seen_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  ++seen_;
  return since_best_ >= patience_;
}

}  // namespace lvtts::trainer
