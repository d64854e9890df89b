#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stuc/config.hpp"
#include "stuc/metrics.hpp"

namespace stuc {

/// Files of one finished run inside its run directory.
struct RunArtifact {
  std::string dir;
  std::string metrics_path;
  std::string config_path;
  std::string checkpoint_path;
  std::string confusion_path;
  std::string summary_path;
  RunSummary summary;
};

inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kConfusionFile = "confusion.csv";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kTrajectoryFile = "trajectory.csv";

RunArtifact artifact_paths(const std::string& dir);
/// Reads the summary of a run directory. Throws IoError if anything is missing.
RunArtifact load_run_artifact(const std::string& dir);

/// CSV with columns t, tau, mean_sigma, mask_ratio, pl_quantity.
std::string trajectory_export(const TrainReport& report);

/// One row per mode in the order fixed-threshold, uscl-only, satpl-only,
/// satpl+uscl, averaging over runs (seeds) of that mode. Columns:
/// method, satpl, uscl, runs, quant_pct, qual_pct, acc_pct.
std::string ablation_table(const std::vector<RunArtifact>& runs);

/// Mean accuracy per (eps1, eps2): columns eps1, eps2, runs, acc_pct, quant_pct, qual_pct.
std::string eps_sweep_table(const std::vector<RunArtifact>& runs);

/// Mean accuracy per threshold EMA decay: columns lambda, runs, acc_pct.
std::string ema_sweep_table(const std::vector<RunArtifact>& runs);

/// Checks the per-row invariants of a metrics stream: accepted + anchors +
/// skipped == unlabeled, unlabeled in {0, expected_unlabeled},
/// mask_ratio == 1 - quantity, sigma <= tau, quantity/quality/mask in [0, 1],
/// and a contrastive weight that is strictly decreasing for t >= 1 (or
/// identically zero when disabled). Returns one message per violation.
std::vector<std::string> validate_metrics(const TrainReport& report,
                                          std::size_t expected_unlabeled);

}  // namespace stuc
