#include "stuc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "stuc/core_types.hpp"

namespace stuc {
namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double to_real(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw IoError("malformed number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw IoError("malformed number '" + s + "'");
  }
}

std::uint64_t to_count(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw IoError("malformed integer '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw IoError("malformed integer '" + s + "'");
  }
}

}  // namespace

std::string metrics_header(std::size_t num_classes) {
  std::string h = "t,loss_s,loss_u,loss_c,loss_total,lambda_c,lr,tau";
  for (std::size_t c = 0; c < num_classes; ++c) h += ",sigma_" + std::to_string(c);
  h += ",mask_ratio,pl_quantity,pl_quality,quality_degenerate,unlabeled,accepted,"
       "anchors,skipped,mean_positive,candidates,eval_acc";
  return h;
}

std::string format_row(const IterationRow& r) {
  std::string s = std::to_string(r.t);
  for (double v : {r.loss_s, r.loss_u, r.loss_c, r.loss_total, r.lambda_c, r.lr, r.tau}) {
    s += "," + real(v);
  }
  for (double v : r.sigma) s += "," + real(v);
  s += "," + real(r.mask_ratio) + "," + real(r.pl_quantity) + "," + real(r.pl_quality);
  s += r.quality_degenerate ? ",1" : ",0";
  for (std::size_t v : {r.unlabeled, r.accepted, r.anchors, r.skipped}) {
    s += "," + std::to_string(v);
  }
  s += "," + real(r.mean_positive) + "," + std::to_string(r.candidates) + ",";
  if (r.eval_acc) s += real(*r.eval_acc);
  return s;
}

MetricsWriter::MetricsWriter(const std::string& path, std::size_t num_classes)
    : out_(path), num_classes_(num_classes) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
  out_ << metrics_header(num_classes) << '\n';
}

void MetricsWriter::write(const IterationRow& row) {
  if (row.sigma.size() != num_classes_) throw ContractError("row has the wrong class count");
  out_ << format_row(row) << '\n';
  if (!out_) throw IoError("metrics write failed");
}

void MetricsWriter::flush() {
  out_.flush();
  if (!out_) throw IoError("metrics flush failed");
}

TrainReport parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty metrics file");
  const auto header = split_csv(line);
  // Fixed columns: 8 leading, 11 trailing.
  if (header.size() < 8 + 2 + 11) throw IoError("metrics header too short");
  const std::size_t C = header.size() - 19;
  if (line != metrics_header(C)) throw IoError("unexpected metrics header");
  TrainReport report;
  report.num_classes = C;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw IoError("metrics row has the wrong column count");
    IterationRow r;
    std::size_t k = 0;
    r.t = to_count(f[k++]);
    r.loss_s = to_real(f[k++]);
    r.loss_u = to_real(f[k++]);
    r.loss_c = to_real(f[k++]);
    r.loss_total = to_real(f[k++]);
    r.lambda_c = to_real(f[k++]);
    r.lr = to_real(f[k++]);
    r.tau = to_real(f[k++]);
    for (std::size_t c = 0; c < C; ++c) r.sigma.push_back(to_real(f[k++]));
    r.mask_ratio = to_real(f[k++]);
    r.pl_quantity = to_real(f[k++]);
    r.pl_quality = to_real(f[k++]);
    r.quality_degenerate = to_count(f[k++]) != 0;
    r.unlabeled = to_count(f[k++]);
    r.accepted = to_count(f[k++]);
    r.anchors = to_count(f[k++]);
    r.skipped = to_count(f[k++]);
    r.mean_positive = to_real(f[k++]);
    r.candidates = to_count(f[k++]);
    if (!f[k].empty()) r.eval_acc = to_real(f[k]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

TrainReport read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str());
}

void write_confusion_csv(const std::string& path, const ConfusionMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "true\\pred";
  for (std::size_t c = 0; c < m.size(); ++c) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < m.size(); ++r) {
    out << r;
    for (auto v : m[r]) out << ',' << v;
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

RunSummary summarize(const TrainReport& report, const TrainConfig& cfg) {
  RunSummary s;
  s.mode = to_string(cfg.mode);
  s.seed = cfg.seed;
  s.iterations = report.rows.size();
  s.final_accuracy = report.final_eval.accuracy;
  s.threshold_decay = cfg.threshold_decay;
  s.eps1 = cfg.eps1;
  s.eps2 = cfg.eps2;
  const std::size_t n = report.rows.size();
  if (n == 0) return s;
  const std::size_t tail = std::max<std::size_t>(1, (n + 9) / 10);
  for (std::size_t i = n - tail; i < n; ++i) {
    s.mean_quantity_last10 += report.rows[i].pl_quantity;
    s.mean_quality_last10 += report.rows[i].pl_quality;
    s.mean_mask_ratio_last10 += report.rows[i].mask_ratio;
  }
  s.mean_quantity_last10 /= static_cast<double>(tail);
  s.mean_quality_last10 /= static_cast<double>(tail);
  s.mean_mask_ratio_last10 /= static_cast<double>(tail);
  return s;
}

std::string to_json(const RunSummary& s) {
  nlohmann::json j;
  j["mode"] = s.mode;
  j["seed"] = s.seed;
  j["iterations"] = s.iterations;
  j["final_accuracy"] = s.final_accuracy;
  j["mean_quantity_last10"] = s.mean_quantity_last10;
  j["mean_quality_last10"] = s.mean_quality_last10;
  j["mean_mask_ratio_last10"] = s.mean_mask_ratio_last10;
  j["threshold_decay"] = s.threshold_decay;
  j["eps1"] = s.eps1;
  j["eps2"] = s.eps2;
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunSummary s;
    s.mode = j.at("mode").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.iterations = j.at("iterations").get<std::size_t>();
    s.final_accuracy = j.at("final_accuracy").get<double>();
    s.mean_quantity_last10 = j.at("mean_quantity_last10").get<double>();
    s.mean_quality_last10 = j.at("mean_quality_last10").get<double>();
    s.mean_mask_ratio_last10 = j.at("mean_mask_ratio_last10").get<double>();
    s.threshold_decay = j.at("threshold_decay").get<double>();
    s.eps1 = j.at("eps1").get<double>();
    s.eps2 = j.at("eps2").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed summary: ") + e.what());
  }
}

}  // namespace stuc
