#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "stuc/config.hpp"

namespace stuc {

struct PseudoLabelStats {
  double quantity = 0.0;    // accepted / total
  double quality = 1.0;     // correct among accepted / accepted
  double mask_ratio = 1.0;  // rejected / total
  bool quality_degenerate = false;  // nothing accepted, quality defaulted to 1
  std::size_t accepted = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

using ConfusionMatrix = std::vector<std::vector<std::uint64_t>>;

struct Evaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion;  // rows: true class, columns: predicted
};

/// One row of the metrics stream.
struct IterationRow {
  std::uint64_t t = 0;
  double loss_s = 0.0;
  double loss_u = 0.0;
  double loss_c = 0.0;
  double loss_total = 0.0;
  double lambda_c = 0.0;
  double lr = 0.0;
  double tau = 0.0;
  std::vector<double> sigma;
  double mask_ratio = 0.0;
  double pl_quantity = 0.0;
  double pl_quality = 0.0;
  bool quality_degenerate = false;
  std::size_t unlabeled = 0;
  std::size_t accepted = 0;
  std::size_t anchors = 0;
  std::size_t skipped = 0;
  double mean_positive = 0.0;
  std::size_t candidates = 0;
  std::optional<double> eval_acc;

  bool operator==(const IterationRow&) const = default;
};

struct TrainReport {
  std::size_t num_classes = 2;
  std::vector<IterationRow> rows;
  Evaluation final_eval;
};

/// Metrics stream CSV. Columns, in order:
///   t, loss_s, loss_u, loss_c, loss_total, lambda_c, lr, tau,
///   sigma_0 .. sigma_{C-1}, mask_ratio, pl_quantity, pl_quality,
///   quality_degenerate, unlabeled, accepted, anchors, skipped,
///   mean_positive, candidates, eval_acc
/// Reals use 17 significant digits; eval_acc is empty on rows without an
/// evaluation.
std::string metrics_header(std::size_t num_classes);
std::string format_row(const IterationRow& row);

/// Appends rows to a metrics CSV, header first.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, std::size_t num_classes);
  void write(const IterationRow& row);
  void flush();

 private:
  std::ofstream out_;
  std::size_t num_classes_;
};

/// Parses a metrics CSV written by MetricsWriter.
TrainReport read_metrics_csv(const std::string& path);
TrainReport parse_metrics_csv(const std::string& text);

void write_confusion_csv(const std::string& path, const ConfusionMatrix& m);

/// Run summary as JSON text.
struct RunSummary {
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_accuracy = 0.0;
  double mean_quantity_last10 = 0.0;
  double mean_quality_last10 = 0.0;
  double mean_mask_ratio_last10 = 0.0;
  double threshold_decay = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;

  bool operator==(const RunSummary&) const = default;
};

/// Averages over the last ceil(10%) of rows.
RunSummary summarize(const TrainReport& report, const TrainConfig& cfg);
std::string to_json(const RunSummary& s);
RunSummary summary_from_json(const std::string& text);

}  // namespace stuc
