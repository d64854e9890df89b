// Acceptance suite: runs criteria 1-8 and prints one PASS/FAIL line each.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stuc/augmentation.hpp"
#include "stuc/checkpoint.hpp"
#include "stuc/experiment.hpp"
#include "stuc/satpl.hpp"
#include "stuc/trainer.hpp"
#include "stuc/uscl.hpp"
#include "test_support.hpp"

using namespace stuc;
namespace fs = std::filesystem;

namespace {

// Frozen pilot of the two-moons ablation (seeds 0-4, configs/two_moons.json):
// mean final accuracy and last-10% quantity per mode, in percent.
struct PilotRow {
  const char* mode;
  double acc_pct;
  double quant_pct;
};
constexpr PilotRow kPilot[] = {
    {"fixed-threshold", 88.82, 94.99},
    {"uscl-only", 89.08, 95.07},
    {"satpl-only", 96.74, 95.45},
    {"satpl+uscl", 96.74, 95.44},
};
constexpr double kTargetAccuracy = 0.95;
constexpr std::size_t kSeeds = 5;

/// Collects failed checks of one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " (got %.17g, want %.17g +- %g)", got, want, tol);
    expect(std::abs(got - want) <= tol, what + buf);
  }
  bool ok() const { return failures_.empty(); }
  std::size_t count() const { return count_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::size_t count_ = 0;
  std::vector<std::string> failures_;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Outcome from_checks(const Checks& c, const std::string& label) {
  for (const auto& f : c.failures()) std::cout << "  check failed: " << f << "\n";
  return {c.ok(), std::to_string(c.count() - c.failures().size()) + "/" +
                      std::to_string(c.count()) + " " + label};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double reference_normal(std::mt19937_64& e) {
  auto u = [&] { return static_cast<double>(e() >> 11) / 9007199254740992.0; };
  double u1 = u();
  while (u1 <= 0.0) u1 = u();
  const double u2 = u();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Per-batch probabilities with every sample's max confidence equal to m.
std::vector<ProbVector> confidence_batch(std::size_t classes, std::size_t n, double m) {
  std::vector<ProbVector> out;
  const double rest = (1.0 - m) / static_cast<double>(classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    Vector p(classes, rest);
    p[i % classes] = m;
    out.emplace_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------- criterion 1

void oracle_core(Checks& c) {
  c.near(cross_entropy(2, ProbVector({0.1, 0.2, 0.7})), -std::log(0.7), 1e-12,
         "cross entropy of 0.7");

  Rng rng(42);
  const Vector out = augment_weak({0.0, 0.0}, AugmentPolicy::weak_vector(0.1), rng);
  std::mt19937_64 e(42);
  const double n0 = reference_normal(e), n1 = reference_normal(e);
  c.near(out[0], 0.1 * n0, 1e-15, "weak noise replay [0]");
  c.near(out[1], 0.1 * n1, 1e-15, "weak noise replay [1]");

  const Vector x{0.5, -0.5};
  const auto weak = AugmentPolicy::weak_vector(0.05);
  const auto strong = AugmentPolicy::strong_vector(0.15, 0.0);
  double dw = 0.0, ds = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng a(s), b(s);
    dw += distance(augment_weak(x, weak, a), x);
    ds += distance(augment_strong(x, strong, b), x);
  }
  c.expect(ds > dw, "strong perturbation exceeds weak over 1000 seeds");
}

void oracle_satpl(Checks& c) {
  ThresholdState s = init_threshold_state(2, 0.999);
  s.tau = 0.1;
  const auto half = std::vector<ProbVector>(4, ProbVector({0.5, 0.5}));
  c.near(update_global_threshold(s, half), 0.999 * 0.1 + 0.001 * 0.5, 1e-15,
         "global threshold step");

  ThresholdState ema = init_threshold_state(2, 0.95);
  const double tau0 = ema.tau;
  const auto batch = std::vector<ProbVector>(3, ProbVector({0.8, 0.2}));
  for (int t = 1; t <= 400; ++t) update_global_threshold(ema, batch);
  c.near(ema.tau, 0.8 + (tau0 - 0.8) * std::pow(0.95, 400), 1e-12, "EMA closed form");

  ThresholdState st = init_threshold_state(2, 0.999);
  st.tau = 0.5;
  const std::vector<ProbVector> p1{ProbVector({0.9, 0.1}), ProbVector({0.2, 0.8})};
  c.expect(update_class_status(st, p1) == std::vector<std::uint64_t>{1, 1}, "phi = [1, 1]");
  ThresholdState st2 = init_threshold_state(2, 0.999);
  st2.tau = 0.5;
  const std::vector<ProbVector> p2{ProbVector({0.6, 0.4}), ProbVector({0.7, 0.3}),
                                   ProbVector({0.2, 0.8})};
  c.expect(update_class_status(st2, p2) == std::vector<std::uint64_t>{2, 1}, "phi = [2, 1]");

  // Brute-force recount against random batches.
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    ThresholdState r = init_threshold_state(3, 0.9);
    r.tau = u(gen);
    std::vector<ProbVector> b;
    std::vector<std::uint64_t> want(3, 0);
    for (int i = 0; i < 12; ++i) {
      Vector v{u(gen), u(gen), u(gen)};
      const double sum = v[0] + v[1] + v[2];
      for (auto& x : v) x /= sum;
      b.emplace_back(v);
      const ProbVector& q = b.back();
      if (q.max() > r.tau) ++want[q.argmax()];
    }
    if (update_class_status(r, b) != want) {
      c.expect(false, "phi recount, trial " + std::to_string(trial));
      break;
    }
  }

  const std::vector<std::uint64_t> phi{4, 2, 0};
  const auto norm = normalize_status(phi);
  c.expect(norm == Vector{1.0, 0.5, 0.0}, "Phi = [1, 0.5, 0]");
  const Vector status{1.0, 0.5};
  const auto sigma = local_thresholds(status, 0.8);
  c.near(sigma[0], 0.8, 1e-15, "sigma[0]");
  c.near(sigma[1], 0.4, 1e-15, "sigma[1]");

  const std::vector<ProbVector> a{ProbVector({0.7, 0.3})};
  const Vector s1{0.6, 0.9};
  const auto d1 = decide_pseudo_labels(a, s1);
  c.expect(d1[0].label == 0 && d1[0].accepted, "0.7 >= 0.6 accepted");
  const std::vector<ProbVector> r{ProbVector({0.55, 0.45})};
  const Vector s2{0.6, 0.2};
  const auto d2 = decide_pseudo_labels(r, s2);
  c.expect(d2[0].label == 0 && !d2[0].accepted, "0.55 < 0.6 rejected");
}

void oracle_uscl(Checks& c) {
  const std::vector<Embedding> cands{Embedding({1.0, 0.0}), Embedding({0.0, 1.0})};
  const auto g = relation_distribution(Embedding({1.0, 0.0}), cands, 0.1);
  const double e10 = std::exp(-10.0);
  c.near(g.gamma[0], 1.0 / (1.0 + e10), 1e-15, "gamma[0]");
  c.near(g.gamma[1], e10 / (1.0 + e10), 1e-15, "gamma[1]");

  RelationDistribution gw{{0.9, 0.1}, 0.1}, gs{{0.7, 0.3}, 0.1};
  const std::vector<std::size_t> ids{3, 5};
  c.expect(select_positive_set(0, gw, gs, 0.8, 0.6, ids) == std::vector<std::size_t>{3},
           "positive set = {candidate 0}");

  const std::vector<Embedding> members{Embedding({2, 2}), Embedding({4, 0}), Embedding({0, 4})};
  const auto proto = positive_prototype(members);
  c.expect(proto && (*proto)[0] == 2.0 && (*proto)[1] == 2.0, "prototype = [2, 2]");

  // Inclusion frequency of each eligible index over 10^4 draws of 3 from 10
  // with 3 excluded: p = 3/7 each.
  const std::vector<std::size_t> excl{1, 4, 8};
  std::map<std::size_t, int> hits;
  Rng rng(17);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    for (auto k : sample_negatives(10, excl, 3, rng)) ++hits[k];
  }
  const double p = 3.0 / 7.0;
  const double sd = std::sqrt(draws * p * (1.0 - p));
  bool uniform = hits.size() == 7;
  for (auto [k, n] : hits) {
    uniform = uniform && std::abs(n - draws * p) <= 3.0 * sd &&
              std::find(excl.begin(), excl.end(), k) == excl.end();
  }
  c.expect(uniform, "negative sampling uniform within 3 sigma");

  ContrastiveBatchPlan plan;
  plan.temperature = 0.1;
  plan.batch_size = 1;
  plan.anchors.push_back(AnchorPlan{0, {1}, {2}});
  const std::vector<Embedding> emb{Embedding({1, 0}), Embedding({1, 0}), Embedding({-1, 0})};
  const double want = -std::log(std::exp(10.0) / (std::exp(10.0) + std::exp(-10.0)));
  c.near(unreliable_contrastive_loss(plan, emb), want, 1e-15, "InfoNCE 2.06e-9");
  c.near(want, 2.06e-9, 1e-11, "InfoNCE magnitude");
}

void oracle_model(Checks& c) {
  // Softmax-CE gradient of a linear encoder plus classifier, by hand.
  Architecture arch;
  arch.input_dim = 3;
  arch.hidden = {};
  arch.embed_dim = 2;
  arch.num_classes = 3;
  Rng rng(9);
  auto params = ModelParams::init(arch, rng);
  CompositeBatch b;
  b.labeled_x = {{0.5, -1.0, 2.0}};
  b.labels = {1};
  const auto got = composite_gradient(params, b, {0.0, 0.0});
  const auto layers = layer_layouts(arch);
  const auto& enc = layers[0];
  const auto& cls = layers[1];
  const Vector& x = b.labeled_x[0];
  const Vector& w = params.values;
  Vector z(2);
  for (std::size_t i = 0; i < 2; ++i) {
    z[i] = w[enc.bias_offset + i];
    for (std::size_t j = 0; j < 3; ++j) z[i] += w[enc.weight_offset + i * 3 + j] * x[j];
  }
  Vector logit(3);
  for (std::size_t k = 0; k < 3; ++k) {
    logit[k] = w[cls.bias_offset + k];
    for (std::size_t i = 0; i < 2; ++i) logit[k] += w[cls.weight_offset + k * 2 + i] * z[i];
  }
  const auto p = ProbVector::from_logits(logit);
  Vector delta(3), want(w.size(), 0.0);
  for (std::size_t k = 0; k < 3; ++k) delta[k] = p[k] - (k == 1 ? 1.0 : 0.0);
  for (std::size_t k = 0; k < 3; ++k) {
    want[cls.bias_offset + k] = delta[k];
    for (std::size_t i = 0; i < 2; ++i) want[cls.weight_offset + k * 2 + i] = delta[k] * z[i];
  }
  for (std::size_t i = 0; i < 2; ++i) {
    double dz = 0.0;
    for (std::size_t k = 0; k < 3; ++k) dz += w[cls.weight_offset + k * 2 + i] * delta[k];
    want[enc.bias_offset + i] = dz;
    for (std::size_t j = 0; j < 3; ++j) want[enc.weight_offset + i * 3 + j] = dz * x[j];
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) worst = std::max(worst, std::abs(got.grad[k] - want[k]));
  c.expect(worst <= 1e-10, "softmax-CE hand gradient, max diff " + fmt("%.3g", worst));

  Architecture ref;
  ref.input_dim = 2;
  ref.hidden = {16};
  ref.embed_dim = 8;
  ref.num_classes = 3;
  Rng prng(3);
  const auto rp = ModelParams::init(ref, prng);
  const auto cb = testing::make_composite_batch(ref, 3);
  const LossWeights lw{1.0, 1.0};
  const double err = testing::relative_error(composite_gradient(rp, cb, lw).grad,
                                             testing::finite_difference_gradient(rp, cb, lw));
  c.expect(err <= 1e-4, "all-term gradient vs finite differences " + fmt("%.3g", err));

  Architecture one;
  one.input_dim = 1;
  one.hidden = {};
  one.embed_dim = 2;
  one.num_classes = 2;
  ModelParams mp = ModelParams::zeros(one);
  SgdMomentum opt(mp.values.size(), 0.9);
  const Vector grad(mp.values.size(), 1.0);
  opt.step(mp, grad, 1.0);
  opt.step(mp, grad, 1.0);
  c.near(mp.values[0], -2.9, 1e-15, "momentum displacement 2.9g");

  ModelParams zero = ModelParams::zeros(one), ones = ModelParams::zeros(one);
  std::fill(ones.values.begin(), ones.values.end(), 1.0);
  EmaShadow shadow = EmaShadow::of(zero, 0.5);
  shadow.update(ones);
  shadow.update(ones);
  c.near(shadow.shadow.values[0], 0.75, 1e-15, "EMA shadow 0.75");
}

void oracle_data_and_trainer(Checks& c) {
  const auto train = make_two_moons(1000, 0.1, 1);
  const auto test = make_two_moons(1000, 0.1, 2);
  std::size_t correct = 0;
  for (const auto& q : test.pool.labeled) {
    double best = 1e300;
    std::size_t label = 0;
    for (const auto& r : train.pool.labeled) {
      const double d = distance(q.x, r.x);
      if (d < best) best = d, label = r.y;
    }
    correct += label == q.y;
  }
  const double acc = static_cast<double>(correct) / test.pool.labeled.size();
  c.expect(acc >= 0.99, "1-NN on two moons " + fmt("%.4f", acc));

  TrainConfig cfg;
  cfg.iterations = 150;
  cfg.batch = BatchConfig{16, 4, 10, 8};
  cfg.model.hidden = {32};
  cfg.model.embed_dim = 8;
  cfg.data.kind = DataKind::kBlobs;
  cfg.data.classes = 10;
  cfg.data.n = 2000;
  cfg.data.test_n = 200;
  cfg.data.spreads = {0.3, 0.3, 0.5, 0.8, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  cfg.eval_interval = 150;
  cfg.mode = TrainMode::kSatplOnly;
  cfg.seed = 1;
  Trainer t(cfg, build_run_data(cfg));
  t.run();
  const auto& phi = t.thresholds().phi;
  const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
  c.expect(*hi > 0 && *lo < *hi, "heterogeneous blobs give unequal class status");

  c.near(contrastive_weight(500, 500, 2.0), 2.0 * std::exp(-1.0), 1e-15,
         "contrastive weight at t = T");
  c.near(total_loss(0.5, 0.2, 0.3, 1.0, 0.1), 0.73, 1e-15, "total loss 0.73");

  std::vector<PseudoLabelDecision> d(10);
  std::vector<std::size_t> truth(10, 0);
  for (std::size_t i = 0; i < 10; ++i) {
    d[i].label = 0;
    d[i].accepted = i < 8;
    if (i >= 6) truth[i] = 1;
  }
  const auto stats = pseudo_label_diagnostics(d, truth);
  c.near(stats.quantity, 0.8, 1e-15, "quantity");
  c.near(stats.quality, 0.75, 1e-15, "quality");
  c.near(stats.mask_ratio, 0.2, 1e-15, "mask ratio");

  ThresholdState s = init_threshold_state(2, 0.9);
  const auto batch = std::vector<ProbVector>(4, ProbVector({0.85, 0.15}));
  double prev = s.tau;
  bool rising = true;
  for (int i = 0; i < 100; ++i) {
    const double tau = update_global_threshold(s, batch);
    rising = rising && tau > prev && tau < 0.85;
    prev = tau;
  }
  c.expect(rising, "constant stream: tau rises monotonically toward m");
}

Outcome criterion1() {
  Checks c;
  oracle_core(c);
  oracle_satpl(c);
  oracle_uscl(c);
  oracle_model(c);
  oracle_data_and_trainer(c);
  return from_checks(c, "oracle checks");
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion2() {
  double worst = 0.0;
  std::size_t points = 0;
  bool terms_active = true;
  for (const auto act : {Activation::kElu, Activation::kTanh}) {
    Architecture arch;
    arch.input_dim = 2;
    arch.hidden = {16};
    arch.embed_dim = 8;
    arch.num_classes = 3;
    arch.activation = act;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(1000 + seed);
      const auto params = ModelParams::init(arch, rng);
      const auto batch = testing::make_composite_batch(arch, seed);
      const LossWeights w{1.0, 1.0};
      const auto g = composite_gradient(params, batch, w);
      terms_active = terms_active && g.terms.supervised > 0.0 &&
                     g.terms.unsupervised > 0.0 && g.terms.contrastive > 0.0;
      const auto fd = testing::finite_difference_gradient(params, batch, w, 1e-5);
      worst = std::max(worst, testing::relative_error(g.grad, fd));
      ++points;
    }
  }
  return {terms_active && worst <= 1e-4,
          std::to_string(points) + " parameter points on 2-16-8-3, worst relative error " +
              fmt("%.3g", worst) + (terms_active ? "" : ", a loss term was inactive")};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3() {
  constexpr std::size_t kClasses = 10, kBatch = 16;
  constexpr double kLambda = 0.999, kStart = 0.3, kEnd = 0.95;
  const auto iterations = static_cast<std::size_t>(std::llround(10.0 / (1.0 - kLambda)));
  // Linear rise over the first 2/(1-lambda) iterations, then flat.
  const auto ramp = static_cast<std::size_t>(std::llround(2.0 / (1.0 - kLambda)));
  ThresholdState s = init_threshold_state(kClasses, kLambda, 8);
  bool monotone = true, bounded = true;
  double prev = s.tau;
  for (std::size_t t = 0; t < iterations; ++t) {
    const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(ramp));
    const auto batch = confidence_batch(kClasses, kBatch, kStart + (kEnd - kStart) * frac);
    update_class_status(s, batch);
    refresh_local_thresholds(s);
    for (double v : s.sigma) bounded = bounded && v <= s.tau;
    const double tau = update_global_threshold(s, batch);
    monotone = monotone && tau > prev;
    prev = tau;
  }
  const double gap = std::abs(prev - kEnd);
  return {monotone && bounded && gap <= 0.01,
          std::to_string(iterations) + " iterations, final tau " + fmt("%.6f", prev) +
              ", |tau - 0.95| = " + fmt("%.2e", gap) + (monotone ? ", monotone" : ", NOT monotone") +
              (bounded ? ", sigma <= tau throughout" : ", sigma exceeded tau")};
}

// ---------------------------------------------------------------- criterion 4

struct ModeMeans {
  double acc = 0.0;
  double quant = 0.0;
  std::size_t runs = 0;
};

std::map<std::string, ModeMeans> means_by_mode(const std::vector<RunArtifact>& runs) {
  std::map<std::string, ModeMeans> m;
  for (const auto& r : runs) {
    auto& x = m[r.summary.mode];
    x.acc += r.summary.final_accuracy;
    x.quant += r.summary.mean_quantity_last10;
    ++x.runs;
  }
  for (auto& [_, x] : m) {
    x.acc /= static_cast<double>(x.runs);
    x.quant /= static_cast<double>(x.runs);
  }
  return m;
}

Outcome criterion4(const TrainConfig& base, const fs::path& work,
                   std::vector<RunArtifact>& all_runs) {
  const auto runs = run_ablation(base, kSeeds, (work / "ablation").string());
  all_runs.insert(all_runs.end(), runs.begin(), runs.end());
  std::cout << slurp(work / "ablation" / "ablation.csv");
  const auto m = means_by_mode(runs);
  for (const auto& p : kPilot) {
    const auto& x = m.at(p.mode);
    std::printf("  %-16s acc %.2f%% (pilot %.2f%%), quantity %.2f%% (pilot %.2f%%)\n", p.mode,
                100.0 * x.acc, p.acc_pct, 100.0 * x.quant, p.quant_pct);
  }
  const auto& full = m.at("satpl+uscl");
  const auto& fixed = m.at("fixed-threshold");
  const bool beats = full.acc >= fixed.acc && full.acc >= m.at("satpl-only").acc &&
                     full.acc >= m.at("uscl-only").acc;
  const bool more = full.quant > fixed.quant;
  const bool target = full.acc >= kTargetAccuracy;
  return {beats && more && target,
          fmt("full %.2f%% vs fixed %.2f%%", 100.0 * full.acc, 100.0 * fixed.acc) +
              fmt(", quantity %.2f%% vs %.2f%%", 100.0 * full.quant, 100.0 * fixed.quant) +
              (beats ? ", not below any ablation" : ", below an ablation") +
              (target ? ", target 95% met" : ", target 95% missed")};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5(const TrainConfig& base, const fs::path& work,
                   std::vector<RunArtifact>& all_runs) {
  const auto runs = run_ema_sweep(base, kSeeds, (work / "ema_sweep").string());
  all_runs.insert(all_runs.end(), runs.begin(), runs.end());
  std::cout << slurp(work / "ema_sweep" / "ema_sweep.csv");
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto& r : runs) {
    acc[r.summary.threshold_decay].first += r.summary.final_accuracy;
    ++acc[r.summary.threshold_decay].second;
  }
  double lo = 1.0, hi = 0.0;
  for (const auto& [_, v] : acc) {
    const double mean = v.first / static_cast<double>(v.second);
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  const double span_pp = 100.0 * (hi - lo);
  return {acc.size() == kSweepEmaDecay.size() && span_pp <= 2.0,
          fmt("mean accuracy %.2f%%..%.2f%% over 4 decays, span %.2f pp (limit 2)", 100.0 * lo,
              100.0 * hi, span_pp)};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6(const TrainConfig& base, const fs::path& work,
                   std::vector<RunArtifact>& all_runs) {
  if (all_runs.empty()) {
    TrainConfig cfg = base;
    for (auto mode : {TrainMode::kFull, TrainMode::kFixedThreshold, TrainMode::kSatplOnly,
                      TrainMode::kUsclOnly}) {
      cfg.mode = mode;
      all_runs.push_back(execute_run(cfg, (work / "invariants" / to_string(mode)).string()));
    }
  }
  std::size_t rows = 0, violations = 0;
  for (const auto& r : all_runs) {
    const TrainConfig cfg = load_config(r.config_path);
    const auto report = read_metrics_csv(r.metrics_path);
    rows += report.rows.size();
    const auto errors = validate_metrics(report, cfg.batch.unlabeled_batch());
    for (std::size_t i = 0; i < std::min<std::size_t>(errors.size(), 3); ++i) {
      std::cout << "  " << r.metrics_path << ": " << errors[i] << "\n";
    }
    violations += errors.size();
  }
  return {violations == 0 && rows > 0,
          std::to_string(all_runs.size()) + " runs, " + std::to_string(rows) + " rows, " +
              std::to_string(violations) + " violations"};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7(const TrainConfig& base, const fs::path& work) {
  Checks c;
  const auto a = work / "determinism" / "a", b = work / "determinism" / "b";
  execute_run(base, a.string());
  execute_run(base, b.string());
  c.expect(slurp(a / kMetricsFile) == slurp(b / kMetricsFile), "metrics CSV byte-identical");
  c.expect(slurp(a / kCheckpointFile) == slurp(b / kCheckpointFile), "checkpoint byte-identical");

  Trainer unbroken(base, build_run_data(base));
  for (int i = 0; i < 500; ++i) unbroken.step();
  const Checkpoint ckpt = unbroken.checkpoint();
  const auto bytes = encode_checkpoint(ckpt);
  c.expect(decode_checkpoint(bytes) == ckpt, "checkpoint decode equals original");
  c.expect(encode_checkpoint(decode_checkpoint(bytes)) == bytes, "checkpoint re-encode bit-exact");
  const auto path = (work / "determinism" / "mid.bin").string();
  save_checkpoint(path, ckpt);
  c.expect(load_checkpoint(path) == ckpt, "checkpoint file round trip");

  constexpr std::size_t kCompare = 300;
  std::vector<IterationRow> expected;
  for (std::size_t i = 0; i < kCompare && !unbroken.done(); ++i) expected.push_back(unbroken.step());
  Trainer resumed(base, build_run_data(base));
  resumed.restore(load_checkpoint(path));
  std::size_t matched = 0;
  for (const auto& row : expected) {
    if (!(resumed.step() == row)) break;
    ++matched;
  }
  c.expect(matched == expected.size() && matched >= 100,
           "resumed run matched " + std::to_string(matched) + " rows");
  c.expect(resumed.params() == unbroken.params(), "resumed parameters equal");
  return from_checks(c, "persistence checks, " + std::to_string(matched) +
                            " resumed iterations identical");
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion8(const TrainConfig& base, const fs::path& work,
                   std::vector<RunArtifact>& all_runs) {
  const auto runs = run_eps_sweep(base, 1, (work / "eps_sweep").string());
  all_runs.insert(all_runs.end(), runs.begin(), runs.end());
  const std::string table = slurp(work / "eps_sweep" / "eps_sweep.csv");
  std::cout << table;
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  bool ok = line == "eps1,eps2,runs,acc_pct,quant_pct,qual_pct";
  std::set<std::pair<double, double>> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    ++rows;
    if (f.size() != 6) {
      ok = false;
      continue;
    }
    try {
      cells.insert({std::stod(f[0]), std::stod(f[1])});
      ok = ok && f[2] == "1";
      for (int k = 3; k < 6; ++k) {
        const double v = std::stod(f[k]);
        ok = ok && v >= 0.0 && v <= 100.0;
      }
    } catch (const std::exception&) {
      ok = false;
    }
  }
  for (double e1 : kSweepEps1) {
    for (double e2 : kSweepEps2) ok = ok && cells.count({e1, e2}) == 1;
  }
  ok = ok && rows == kSweepEps1.size() * kSweepEps2.size();
  return {ok, std::to_string(rows) + " grid rows" + (ok ? ", well formed" : ", malformed")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string config_path, work_dir;
  std::vector<int> only;
  app.add_option("--config", config_path, "two-moons benchmark config")->required();
  app.add_option("--work", work_dir, "scratch directory for runs")->required();
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  TrainConfig base;
  try {
    base = load_config(config_path);
    base.validate();
  } catch (const std::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 1;
  }
  const fs::path work(work_dir);
  fs::remove_all(work);
  fs::create_directories(work);

  std::vector<RunArtifact> all_runs;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1},
      {2, criterion2},
      {3, criterion3},
      {4, [&] { return criterion4(base, work, all_runs); }},
      {5, [&] { return criterion5(base, work, all_runs); }},
      {8, [&] { return criterion8(base, work, all_runs); }},
      {6, [&] { return criterion6(base, work, all_runs); }},
      {7, [&] { return criterion7(base, work); }},
  };
  std::map<int, std::string> lines;
  bool all_pass = true;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    std::cout << "== criterion " << id << "\n" << std::flush;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all_pass = all_pass && o.pass;
    lines[id] = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) +
                ": " + o.detail + fmt(" [%.1f s]", secs);
    std::cout << lines[id] << "\n" << std::flush;
  }
  std::cout << "== summary\n";
  for (const auto& [_, line] : lines) std::cout << line << "\n";
  return all_pass ? 0 : 1;
}
