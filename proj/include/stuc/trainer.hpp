#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stuc/checkpoint.hpp"
#include "stuc/config.hpp"
#include "stuc/datasets.hpp"
#include "stuc/metrics.hpp"
#include "stuc/model.hpp"
#include "stuc/satpl.hpp"
#include "stuc/uscl.hpp"

namespace stuc {

/// lambda_c0 at t = 0, lambda_c0 * exp(-t / total) afterwards.
double contrastive_weight(std::size_t t, std::size_t total_iterations, double lambda_c0);

/// L_s + lambda_u * L_u + lambda_c * L_c.
double total_loss(double supervised, double unsupervised, double contrastive,
                  double lambda_u, double lambda_c);

/// Quantity, quality and mask ratio of one batch of decisions against the
/// ground truth of the same samples.
PseudoLabelStats pseudo_label_diagnostics(std::span<const PseudoLabelDecision> decisions,
                                          std::span<const std::size_t> hidden_labels);

/// Looks up ground truth for batch samples. The only holder of HiddenLabels
/// inside a training run.
class PseudoLabelAuditor {
 public:
  explicit PseudoLabelAuditor(HiddenLabels hidden) : hidden_(std::move(hidden)) {}
  PseudoLabelStats audit(std::span<const PseudoLabelDecision> decisions,
                         std::span<const std::size_t> unlabeled_ids) const;

 private:
  HiddenLabels hidden_;
};

Evaluation evaluate(const ModelParams& params, const EvalSet& eval);

/// Dataset pieces a run needs, built deterministically from a config.
struct RunData {
  SslDataset train;
  EvalSet test;
};

RunData build_run_data(const TrainConfig& cfg);

/// Algorithm driver. Each step(): labeled forward and supervised loss, class
/// status and local thresholds, pseudo-label decisions on the weak views,
/// contrastive plan for the rejected samples, global threshold update, the
/// composite loss and its gradient, an optimizer step and an EMA update.
class Trainer {
 public:
  Trainer(TrainConfig cfg, RunData data);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  IterationRow step();
  bool done() const { return iteration_ >= cfg_.iterations; }
  /// Runs to completion, appending each row to `sink` when given.
  TrainReport run(MetricsWriter* sink = nullptr);

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);
  /// When set, a NumericalError writes the pre-step state here before rethrowing.
  void set_abort_checkpoint(std::string path) { abort_path_ = std::move(path); }

  const TrainConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }
  const EmaShadow& ema() const { return ema_; }
  const ThresholdState& thresholds() const { return thresholds_; }
  std::uint64_t iteration() const { return iteration_; }
  const EvalSet& test_set() const { return test_; }
  const TrainingPool& pool() const { return pool_; }

 private:
  IterationRow step_impl();

  TrainConfig cfg_;
  TrainingPool pool_;
  EvalSet test_;
  PseudoLabelAuditor auditor_;
  ModelParams params_;
  SgdMomentum optimizer_;
  EmaShadow ema_;
  ThresholdState thresholds_;
  BatchSampler sampler_;
  Rng plan_rng_;
  std::uint64_t iteration_ = 0;
  std::string abort_path_;
};

}  // namespace stuc
