#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stuc/config.hpp"
#include "stuc/reporting.hpp"
#include "stuc/trainer.hpp"

namespace stuc {

/// Trains one configuration and writes config.json, metrics.csv,
/// confusion.csv, summary.json, trajectory.csv and checkpoint.bin into `dir`.
RunArtifact execute_run(const TrainConfig& cfg, const std::string& dir);

/// Seeds base.seed, base.seed + 1, ... for `seeds` runs.
std::vector<std::uint64_t> seed_list(const TrainConfig& base, std::size_t seeds);

/// Every mode for every seed under dir/<mode>/seed<k>; writes dir/ablation.csv.
std::vector<RunArtifact> run_ablation(const TrainConfig& base, std::size_t seeds,
                                      const std::string& dir);

inline const std::vector<double> kSweepEps1{0.5, 0.8};
inline const std::vector<double> kSweepEps2{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
inline const std::vector<double> kSweepEmaDecay{0.9, 0.99, 0.999, 0.9999};

/// Grid over (eps1, eps2); writes dir/eps_sweep.csv.
std::vector<RunArtifact> run_eps_sweep(const TrainConfig& base, std::size_t seeds,
                                       const std::string& dir);

/// Grid over the threshold EMA decay; writes dir/ema_sweep.csv.
std::vector<RunArtifact> run_ema_sweep(const TrainConfig& base, std::size_t seeds,
                                       const std::string& dir);

/// Loads a run's config and checkpoint and evaluates the EMA weights on the
/// run's test set.
Evaluation replay(const std::string& run_dir, const std::string& checkpoint_path = "");

void write_text(const std::string& path, const std::string& text);

}  // namespace stuc
