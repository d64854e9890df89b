#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stuc/core_types.hpp"

namespace stuc {

inline constexpr double kDefaultThresholdDecay = 0.999;

/// Per-class above-threshold prediction counts over the most recent batches.
/// Fixed capacity ring; the oldest batch falls out when a new one arrives.
class StatusWindow {
 public:
  StatusWindow() = default;
  StatusWindow(std::size_t num_classes, std::size_t capacity);

  void push(std::vector<std::uint64_t> batch_counts);
  /// Sum of counts over the batches currently held.
  const std::vector<std::uint64_t>& totals() const { return totals_; }

  std::size_t capacity() const { return capacity_; }
  std::size_t filled() const { return slots_.size(); }
  std::size_t head() const { return head_; }
  const std::vector<std::vector<std::uint64_t>>& slots() const { return slots_; }

  /// Rebuilds a window from serialized parts; validates shapes.
  static StatusWindow restore(std::size_t num_classes, std::size_t capacity,
                              std::size_t head,
                              std::vector<std::vector<std::uint64_t>> slots);

  bool operator==(const StatusWindow&) const = default;

 private:
  std::size_t capacity_ = 1;
  std::size_t head_ = 0;
  std::vector<std::vector<std::uint64_t>> slots_;
  std::vector<std::uint64_t> totals_;
};

/// Global threshold, class learning status and local thresholds for one run.
struct ThresholdState {
  double tau = 0.0;
  double lambda = kDefaultThresholdDecay;
  std::vector<std::uint64_t> phi;
  std::vector<double> sigma;
  std::uint64_t t = 0;
  StatusWindow window;

  std::size_t num_classes() const { return phi.size(); }
  bool operator==(const ThresholdState&) const = default;
};

struct PseudoLabelDecision {
  std::size_t label = 0;
  double confidence = 0.0;
  bool accepted = false;
};

/// tau = 1/C, zero counts and thresholds. `window_batches` is the number of
/// recent batches the class status is accumulated over.
ThresholdState init_threshold_state(std::size_t num_classes, double lambda,
                                    std::size_t window_batches = 1);

/// EMA of the batch mean max-confidence. Advances the iteration counter.
double update_global_threshold(ThresholdState& state,
                               std::span<const ProbVector> weak_probs);

/// Counts predictions with max confidence strictly above the current tau,
/// per predicted class, pushes them into the window and refreshes phi.
const std::vector<std::uint64_t>& update_class_status(
    ThresholdState& state, std::span<const ProbVector> weak_probs);

/// phi / max(phi); all ones when every count is zero.
std::vector<double> normalize_status(std::span<const std::uint64_t> phi);

std::vector<double> local_thresholds(std::span<const double> normalized, double tau);

/// Recomputes state.sigma from state.phi and state.tau.
const std::vector<double>& refresh_local_thresholds(ThresholdState& state);

/// argmax label (lowest index on ties), accepted iff max >= sigma[label].
std::vector<PseudoLabelDecision> decide_pseudo_labels(
    std::span<const ProbVector> weak_probs, std::span<const double> sigma);

}  // namespace stuc
