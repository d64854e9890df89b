#include "stuc/satpl.hpp"

#include <algorithm>

namespace stuc {

StatusWindow::StatusWindow(std::size_t num_classes, std::size_t capacity)
    : capacity_(capacity), totals_(num_classes, 0) {
  if (capacity == 0) throw ConfigError("status window needs capacity >= 1");
  slots_.reserve(capacity);
}

void StatusWindow::push(std::vector<std::uint64_t> batch_counts) {
  if (batch_counts.size() != totals_.size()) {
    throw ContractError("status window class count mismatch");
  }
  for (std::size_t c = 0; c < totals_.size(); ++c) totals_[c] += batch_counts[c];
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(batch_counts));
    return;
  }
  for (std::size_t c = 0; c < totals_.size(); ++c) totals_[c] -= slots_[head_][c];
  slots_[head_] = std::move(batch_counts);
  head_ = (head_ + 1) % capacity_;
}

StatusWindow StatusWindow::restore(std::size_t num_classes, std::size_t capacity,
                                   std::size_t head,
                                   std::vector<std::vector<std::uint64_t>> slots) {
  StatusWindow w(num_classes, capacity);
  if (slots.size() > capacity || head >= capacity ||
      (slots.size() < capacity && head != 0)) {
    throw IoError("inconsistent status window");
  }
  for (const auto& s : slots) {
    if (s.size() != num_classes) throw IoError("inconsistent status window");
    for (std::size_t c = 0; c < num_classes; ++c) w.totals_[c] += s[c];
  }
  w.slots_ = std::move(slots);
  w.head_ = head;
  return w;
}

ThresholdState init_threshold_state(std::size_t num_classes, double lambda,
                                    std::size_t window_batches) {
  if (num_classes < 2) throw ConfigError("need at least 2 classes");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ConfigError("threshold EMA decay must lie in (0, 1)");
  }
  ThresholdState s;
  s.tau = 1.0 / static_cast<double>(num_classes);
  s.lambda = lambda;
  s.phi.assign(num_classes, 0);
  s.sigma.assign(num_classes, 0.0);
  s.t = 0;
  s.window = StatusWindow(num_classes, window_batches);
  return s;
}

double update_global_threshold(ThresholdState& state,
                               std::span<const ProbVector> weak_probs) {
  if (weak_probs.empty()) {
    throw ContractError("global threshold update over an empty batch");
  }
  double sum = 0.0;
  for (const auto& p : weak_probs) sum += p.max();
  const double mean = sum / static_cast<double>(weak_probs.size());
  state.tau = state.lambda * state.tau + (1.0 - state.lambda) * mean;
  ++state.t;
  return state.tau;
}

const std::vector<std::uint64_t>& update_class_status(
    ThresholdState& state, std::span<const ProbVector> weak_probs) {
  std::vector<std::uint64_t> counts(state.num_classes(), 0);
  for (const auto& p : weak_probs) {
    if (p.size() != counts.size()) {
      throw ContractError("probability vector has the wrong class count");
    }
    if (p.max() > state.tau) ++counts[p.argmax()];
  }
  state.window.push(std::move(counts));
  state.phi = state.window.totals();
  return state.phi;
}

std::vector<double> normalize_status(std::span<const std::uint64_t> phi) {
  const std::uint64_t top = phi.empty() ? 0 : *std::max_element(phi.begin(), phi.end());
  std::vector<double> out(phi.size(), 1.0);
  if (top == 0) return out;
  for (std::size_t c = 0; c < phi.size(); ++c) {
    out[c] = static_cast<double>(phi[c]) / static_cast<double>(top);
  }
  return out;
}

std::vector<double> local_thresholds(std::span<const double> normalized, double tau) {
  std::vector<double> sigma(normalized.size());
  for (std::size_t c = 0; c < normalized.size(); ++c) {
    if (normalized[c] < 0.0 || normalized[c] > 1.0) {
      throw ContractError("normalized class status outside [0, 1]");
    }
    sigma[c] = normalized[c] * tau;
  }
  return sigma;
}

const std::vector<double>& refresh_local_thresholds(ThresholdState& state) {
  state.sigma = local_thresholds(normalize_status(state.phi), state.tau);
  return state.sigma;
}

std::vector<PseudoLabelDecision> decide_pseudo_labels(
    std::span<const ProbVector> weak_probs, std::span<const double> sigma) {
  std::vector<PseudoLabelDecision> out;
  out.reserve(weak_probs.size());
  for (const auto& p : weak_probs) {
    if (p.size() != sigma.size()) {
      throw ContractError("probability vector has the wrong class count");
    }
    PseudoLabelDecision d;
    d.label = p.argmax();
    d.confidence = p[d.label];
    d.accepted = d.confidence >= sigma[d.label];
    out.push_back(d);
  }
  return out;
}

}  // namespace stuc
