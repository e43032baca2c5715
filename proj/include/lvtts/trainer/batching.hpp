#pragma once

#include <cstddef>
#include <vector>

namespace lvtts::trainer {

// A long stream cut into `lanes` contiguous pieces, each read in
// non-overlapping windows; batch b of lane i continues batch b-1 of lane i.
struct BatchPlan {
  std::size_t lanes = 0;
  std::size_t window = 0;
  std::size_t lane_length = 0;  // floor(stream / lanes)
  std::size_t batches = 0;      // floor(lane_length / window)

  // Offset into the stream of lane i, batch b.
  std::size_t start(std::size_t lane, std::size_t batch) const { return lane * lane_length + batch * window; }
};

// Throws PreconditionError if the stream is shorter than lanes * window.
BatchPlan make_batch_plan(std::size_t stream_length, std::size_t lanes, std::size_t window);

// Stops once `patience` consecutive observations fail to improve on the best.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  // Returns true when training should stop. Lower is better.
  bool observe(double metric);
  bool improved() const { return improved_; }
  double best() const { return best_; }
  std::size_t best_index() const { return best_index_; }
  std::size_t observations() const { return seen_; }

 private:
  std::size_t patience_;
  std::size_t seen_ = 0;
  std::size_t since_best_ = 0;
  std::size_t best_index_ = 0;
  double best_ = 0.0;
  bool improved_ = false;
};

}  // namespace lvtts::trainer
