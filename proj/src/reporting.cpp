#include "stuc/reporting.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "stuc/core_types.hpp"

namespace stuc {
namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Means {
  std::size_t runs = 0;
  double acc = 0.0, quant = 0.0, qual = 0.0;
  void add(const RunSummary& s) {
    ++runs;
    acc += s.final_accuracy;
    quant += s.mean_quantity_last10;
    qual += s.mean_quality_last10;
  }
  Means mean() const {
    Means m = *this;
    if (runs > 0) {
      m.acc /= static_cast<double>(runs);
      m.quant /= static_cast<double>(runs);
      m.qual /= static_cast<double>(runs);
    }
    return m;
  }
};

constexpr double kRowTolerance = 1e-12;

}  // namespace

RunArtifact artifact_paths(const std::string& dir) {
  namespace fs = std::filesystem;
  RunArtifact a;
  a.dir = dir;
  a.metrics_path = (fs::path(dir) / kMetricsFile).string();
  a.config_path = (fs::path(dir) / kConfigFile).string();
  a.checkpoint_path = (fs::path(dir) / kCheckpointFile).string();
  a.confusion_path = (fs::path(dir) / kConfusionFile).string();
  a.summary_path = (fs::path(dir) / kSummaryFile).string();
  return a;
}

RunArtifact load_run_artifact(const std::string& dir) {
  RunArtifact a = artifact_paths(dir);
  if (!std::filesystem::exists(a.metrics_path)) {
    throw IoError("run directory " + dir + " has no metrics");
  }
  a.summary = summary_from_json(read_file(a.summary_path));
  return a;
}

std::string trajectory_export(const TrainReport& report) {
  if (report.rows.empty()) throw ContractError("cannot export an empty report");
  std::string out = "t,tau,mean_sigma,mask_ratio,pl_quantity\n";
  for (const auto& r : report.rows) {
    double mean = 0.0;
    for (double s : r.sigma) mean += s;
    if (!r.sigma.empty()) mean /= static_cast<double>(r.sigma.size());
    out += std::to_string(r.t) + "," + real(r.tau) + "," + real(mean) + "," +
           real(r.mask_ratio) + "," + real(r.pl_quantity) + "\n";
  }
  return out;
}

std::string ablation_table(const std::vector<RunArtifact>& runs) {
  const TrainMode order[] = {TrainMode::kFixedThreshold, TrainMode::kUsclOnly,
                             TrainMode::kSatplOnly, TrainMode::kFull};
  std::map<std::string, Means> by_mode;
  for (const auto& r : runs) {
    mode_from_string(r.summary.mode);
    by_mode[r.summary.mode].add(r.summary);
  }
  if (by_mode.size() < 2) {
    throw ContractError("ablation table needs runs from at least two modes");
  }
  std::string out = "method,satpl,uscl,runs,quant_pct,qual_pct,acc_pct\n";
  for (TrainMode m : order) {
    auto it = by_mode.find(to_string(m));
    if (it == by_mode.end()) continue;
    const Means x = it->second.mean();
    out += to_string(m) + "," + (uses_adaptive_threshold(m) ? "yes" : "no") + "," +
           (uses_contrastive(m) ? "yes" : "no") + "," + std::to_string(x.runs) + "," +
           pct(x.quant) + "," + pct(x.qual) + "," + pct(x.acc) + "\n";
  }
  return out;
}

std::string eps_sweep_table(const std::vector<RunArtifact>& runs) {
  std::map<std::pair<double, double>, Means> cells;
  for (const auto& r : runs) cells[{r.summary.eps1, r.summary.eps2}].add(r.summary);
  if (cells.empty()) throw ContractError("no runs to tabulate");
  std::string out = "eps1,eps2,runs,acc_pct,quant_pct,qual_pct\n";
  char buf[96];
  for (const auto& [key, sum] : cells) {
    const Means x = sum.mean();
    std::snprintf(buf, sizeof buf, "%.2f,%.2f,", key.first, key.second);
    out += buf + std::to_string(x.runs) + "," + pct(x.acc) + "," + pct(x.quant) + "," +
           pct(x.qual) + "\n";
  }
  return out;
}

std::string ema_sweep_table(const std::vector<RunArtifact>& runs) {
  std::map<double, Means> cells;
  for (const auto& r : runs) cells[r.summary.threshold_decay].add(r.summary);
  if (cells.empty()) throw ContractError("no runs to tabulate");
  std::string out = "lambda,runs,acc_pct\n";
  for (const auto& [lambda, sum] : cells) {
    const Means x = sum.mean();
    out += real(lambda) + "," + std::to_string(x.runs) + "," + pct(x.acc) + "\n";
  }
  return out;
}

std::vector<std::string> validate_metrics(const TrainReport& report,
                                          std::size_t expected_unlabeled) {
  std::vector<std::string> errors;
  auto fail = [&](const IterationRow& r, const std::string& what) {
    errors.push_back("t=" + std::to_string(r.t) + ": " + what);
  };
  const bool ramp_enabled = !report.rows.empty() && report.rows.front().lambda_c > 0.0;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const IterationRow& r = report.rows[i];
    if (r.accepted + r.anchors + r.skipped != r.unlabeled) {
      fail(r, "accepted + anchors + skipped != unlabeled batch size");
    }
    if (r.unlabeled != expected_unlabeled && r.unlabeled != 0) {
      fail(r, "unlabeled batch size is not mu*B");
    }
    if (std::abs(r.mask_ratio - (1.0 - r.pl_quantity)) > kRowTolerance) {
      fail(r, "mask_ratio != 1 - quantity");
    }
    for (double v : {r.mask_ratio, r.pl_quantity, r.pl_quality}) {
      if (!(v >= 0.0 && v <= 1.0)) fail(r, "ratio outside [0, 1]");
    }
    for (double s : r.sigma) {
      if (s > r.tau) fail(r, "local threshold above the global threshold");
    }
    if (ramp_enabled) {
      if (i > 0 && !(r.lambda_c < report.rows[i - 1].lambda_c)) {
        fail(r, "contrastive weight not strictly decreasing");
      }
    } else if (r.lambda_c != 0.0) {
      fail(r, "contrastive weight non-zero in a run without the contrastive term");
    }
  }
  return errors;
}

}  // namespace stuc
