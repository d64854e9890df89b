#include "stuc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stuc {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Salt : std::uint64_t { kData = 1, kSplit, kTest, kInit, kSampler, kPlan, kDistractor };

SslDataset generate(const TrainConfig& cfg, std::size_t n, std::uint64_t seed) {
  const DataConfig& d = cfg.data;
  switch (d.kind) {
    case DataKind::kTwoMoons:
      return make_two_moons(n, d.noise, seed);
    case DataKind::kBlobs: {
      BlobOptions o;
      o.dim = d.dim;
      o.spreads = d.spreads;
      return make_blobs(d.classes, n, o, seed);
    }
    case DataKind::kTinyImages:
      return to_dataset(make_tiny_digits(d.classes, n, d.image_side, seed));
  }
  throw ConfigError("unknown data kind");
}

std::pair<SslDataset, SslDataset> tiny_images_from_file(const TrainConfig& cfg) {
  const TinyImageSet all = read_tiny_images(cfg.data.path);
  if (all.num_classes != cfg.data.classes) {
    throw ConfigError("tiny image file class count disagrees with data.classes");
  }
  if (all.pixels.size() <= cfg.data.test_n) {
    throw ConfigError("tiny image file is smaller than test_n");
  }
  TinyImageSet train = all, test = all;
  const std::size_t n_train = all.pixels.size() - cfg.data.test_n;
  train.pixels.resize(n_train);
  train.labels.resize(n_train);
  test.pixels.erase(test.pixels.begin(), test.pixels.begin() + static_cast<long>(n_train));
  test.labels.erase(test.labels.begin(), test.labels.begin() + static_cast<long>(n_train));
  return {to_dataset(train), to_dataset(test)};
}

// Uniform draws from the bounding box of the labeled inputs.
std::vector<Vector> make_distractors(const SslDataset& full, std::size_t count,
                                     std::uint64_t seed) {
  const std::size_t dim = full.pool.input_dim;
  Vector lo(dim, INFINITY), hi(dim, -INFINITY);
  for (const auto& ex : full.pool.labeled) {
    for (std::size_t k = 0; k < dim; ++k) {
      lo[k] = std::min(lo[k], ex.x[k]);
      hi[k] = std::max(hi[k], ex.x[k]);
    }
  }
  Rng rng(seed);
  std::vector<Vector> out(count, Vector(dim));
  for (auto& x : out) {
    for (std::size_t k = 0; k < dim; ++k) x[k] = rng.uniform(lo[k], hi[k]);
  }
  return out;
}

Architecture architecture_for(const TrainConfig& cfg, const TrainingPool& pool) {
  Architecture a;
  a.input_dim = pool.input_dim;
  a.hidden = cfg.model.hidden;
  a.embed_dim = cfg.model.embed_dim;
  a.num_classes = pool.num_classes;
  a.activation = activation_from_string(cfg.model.activation);
  a.validate();
  return a;
}

std::pair<AugmentPolicy, AugmentPolicy> policies_for(const TrainConfig& cfg,
                                                     const TrainingPool& pool) {
  const AugmentConfig& a = cfg.augment;
  std::pair<AugmentPolicy, AugmentPolicy> p;
  if (pool.image) {
    p.first = AugmentPolicy::weak_image(*pool.image, a.flip_prob, a.max_shift);
    p.second = AugmentPolicy::strong_image(*pool.image, a.flip_prob, a.max_shift,
                                           a.image_noise, a.erase_size);
  } else {
    p.first = AugmentPolicy::weak_vector(a.weak_noise);
    p.second = AugmentPolicy::strong_vector(a.strong_noise, a.strong_dropout);
  }
  validate_policy_pair(p.first, p.second);
  return p;
}

std::size_t window_for(const TrainConfig& cfg, const TrainingPool& pool) {
  if (cfg.status_window > 0) return cfg.status_window;
  const std::size_t ub = cfg.batch.unlabeled_batch();
  return std::max<std::size_t>(1, (pool.unlabeled.size() + ub - 1) / ub);
}

double learning_rate(const TrainConfig& cfg, std::uint64_t t) {
  if (!cfg.cosine_lr) return cfg.lr;
  const double progress = static_cast<double>(t) / static_cast<double>(cfg.iterations);
  return cfg.lr * std::cos(7.0 * std::numbers::pi * progress / 16.0);
}

}  // namespace

double contrastive_weight(std::size_t t, std::size_t total_iterations, double lambda_c0) {
  if (total_iterations == 0) throw ContractError("total iterations must be >= 1");
  if (t == 0) return lambda_c0;
  return lambda_c0 *
         std::exp(-static_cast<double>(t) / static_cast<double>(total_iterations));
}

double total_loss(double supervised, double unsupervised, double contrastive,
                  double lambda_u, double lambda_c) {
  return supervised + lambda_u * unsupervised + lambda_c * contrastive;
}

PseudoLabelStats pseudo_label_diagnostics(std::span<const PseudoLabelDecision> decisions,
                                          std::span<const std::size_t> hidden_labels) {
  if (decisions.size() != hidden_labels.size()) {
    throw ContractError("decisions and hidden labels differ in length");
  }
  PseudoLabelStats s;
  s.total = decisions.size();
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!decisions[i].accepted) continue;
    ++s.accepted;
    if (decisions[i].label == hidden_labels[i]) ++s.correct;
  }
  if (s.total > 0) {
    s.quantity = static_cast<double>(s.accepted) / static_cast<double>(s.total);
    s.mask_ratio = static_cast<double>(s.total - s.accepted) / static_cast<double>(s.total);
  }
  if (s.accepted > 0) {
    s.quality = static_cast<double>(s.correct) / static_cast<double>(s.accepted);
  } else {
    s.quality = 1.0;
    s.quality_degenerate = true;
  }
  return s;
}

PseudoLabelStats PseudoLabelAuditor::audit(std::span<const PseudoLabelDecision> decisions,
                                           std::span<const std::size_t> unlabeled_ids) const {
  std::vector<std::size_t> truth;
  truth.reserve(unlabeled_ids.size());
  for (std::size_t id : unlabeled_ids) truth.push_back(hidden_.at(id));
  return pseudo_label_diagnostics(decisions, truth);
}

Evaluation evaluate(const ModelParams& params, const EvalSet& eval) {
  const std::size_t C = params.arch.num_classes;
  Evaluation e;
  e.confusion.assign(C, std::vector<std::uint64_t>(C, 0));
  if (eval.examples.empty()) return e;
  std::size_t correct = 0;
  for (const auto& ex : eval.examples) {
    if (ex.y >= C) throw ContractError("evaluation label out of range");
    const std::size_t pred = forward(params, ex.x).second.argmax();
    ++e.confusion[ex.y][pred];
    if (pred == ex.y) ++correct;
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(eval.examples.size());
  return e;
}

RunData build_run_data(const TrainConfig& cfg) {
  cfg.validate();
  SslDataset full, test;
  if (cfg.data.kind == DataKind::kTinyImages && !cfg.data.path.empty()) {
    std::tie(full, test) = tiny_images_from_file(cfg);
  } else {
    full = generate(cfg, cfg.data.n, derive_seed(cfg.seed, kData));
    test = generate(cfg, cfg.data.test_n, derive_seed(cfg.seed, kTest));
  }
  RunData out;
  out.train = split_ssl(full, cfg.data.labels_per_class, derive_seed(cfg.seed, kSplit));
  if (cfg.data.distractor_fraction > 0.0) {
    const auto count = static_cast<std::size_t>(std::lround(
        cfg.data.distractor_fraction * static_cast<double>(out.train.pool.unlabeled.size())));
    add_distractors(out.train, make_distractors(full, count, derive_seed(cfg.seed, kDistractor)));
  }
  out.test = to_eval_set(test);
  return out;
}

Trainer::Trainer(TrainConfig cfg, RunData data)
    : cfg_((cfg.validate(), std::move(cfg))),
      pool_(std::move(data.train.pool)),
      test_(std::move(data.test)),
      auditor_(std::move(data.train.hidden)),
      params_([&] {
        Rng init(derive_seed(cfg_.seed, kInit));
        return ModelParams::init(architecture_for(cfg_, pool_), init);
      }()),
      optimizer_(params_.values.size(), cfg_.momentum, cfg_.weight_decay),
      ema_(EmaShadow::of(params_, cfg_.ema_decay)),
      thresholds_(init_threshold_state(pool_.num_classes, cfg_.threshold_decay,
                                       window_for(cfg_, pool_))),
      sampler_([&] {
        auto [weak, strong] = policies_for(cfg_, pool_);
        return BatchSampler(pool_, cfg_.batch, weak, strong,
                            derive_seed(cfg_.seed, kSampler));
      }()),
      plan_rng_(derive_seed(cfg_.seed, kPlan)) {
  if (pool_.num_classes != cfg_.batch.num_classes) {
    throw ConfigError("dataset class count disagrees with the config");
  }
}

IterationRow Trainer::step() {
  if (done()) throw ContractError("training already finished");
  if (abort_path_.empty()) return step_impl();
  const Checkpoint last_good = checkpoint();
  try {
    return step_impl();
  } catch (const NumericalError&) {
    save_checkpoint(abort_path_, last_good);
    throw;
  }
}

IterationRow Trainer::step_impl() {
  const std::size_t C = params_.arch.num_classes;
  auto [lb, ub] = sampler_.next_batches();
  const bool adaptive = uses_adaptive_threshold(cfg_.mode);

  CompositeBatch batch;
  batch.labeled_x = std::move(lb.x);
  batch.labels = std::move(lb.y);
  batch.weak_u = std::move(ub.weak);
  batch.strong_u = std::move(ub.strong);
  const std::size_t n_unlabeled = batch.weak_u.size();

  IterationRow row;
  row.t = iteration_;
  row.unlabeled = n_unlabeled;
  row.candidates = n_unlabeled > 0 ? n_unlabeled - 1 : 0;

  std::vector<double> sigma(C, cfg_.fixed_threshold);
  row.tau = adaptive ? thresholds_.tau : cfg_.fixed_threshold;
  if (n_unlabeled > 0) {
    std::vector<ProbVector> weak_probs;
    std::vector<Embedding> weak_emb, strong_emb;
    weak_probs.reserve(n_unlabeled);
    for (std::size_t i = 0; i < n_unlabeled; ++i) {
      auto [z, p] = forward(params_, batch.weak_u[i]);
      weak_emb.push_back(std::move(z));
      weak_probs.push_back(std::move(p));
      strong_emb.push_back(forward(params_, batch.strong_u[i]).first);
    }
    if (adaptive) {
      // Class status and local thresholds use the threshold from the previous
      // iteration; the global threshold moves after the decisions.
      update_class_status(thresholds_, weak_probs);
      sigma = refresh_local_thresholds(thresholds_);
    }
    batch.decisions = decide_pseudo_labels(weak_probs, sigma);
    ContrastiveParams cp{cfg_.eps1, cfg_.eps2, cfg_.temperature, cfg_.negatives};
    batch.plan = build_contrastive_plan(weak_emb, strong_emb, batch.decisions, cp, plan_rng_);
    if (adaptive) update_global_threshold(thresholds_, weak_probs);
  }
  row.sigma = sigma;

  row.lambda_c = uses_contrastive(cfg_.mode)
                     ? contrastive_weight(iteration_, cfg_.iterations, cfg_.lambda_c0)
                     : 0.0;
  const LossWeights weights{cfg_.lambda_u, row.lambda_c};
  const GradientResult g = composite_gradient(params_, batch, weights);
  row.lr = learning_rate(cfg_, iteration_);
  optimizer_.step(params_, g.grad, row.lr);
  ema_.update(params_);

  row.loss_s = g.terms.supervised;
  row.loss_u = g.terms.unsupervised;
  row.loss_c = g.terms.contrastive;
  row.loss_total = g.terms.total;

  const PseudoLabelStats stats = auditor_.audit(batch.decisions, ub.ids);
  row.mask_ratio = stats.mask_ratio;
  row.pl_quantity = stats.quantity;
  row.pl_quality = stats.quality;
  row.quality_degenerate = stats.quality_degenerate;
  row.accepted = stats.accepted;
  row.anchors = batch.plan.anchors.size();
  row.skipped = batch.plan.skipped.size();
  row.mean_positive = batch.plan.mean_positive_set_size();

  ++iteration_;
  if (iteration_ % cfg_.eval_interval == 0 || done()) {
    row.eval_acc = evaluate(ema_.shadow, test_).accuracy;
  }
  return row;
}

TrainReport Trainer::run(MetricsWriter* sink) {
  TrainReport report;
  report.num_classes = params_.arch.num_classes;
  while (!done()) {
    report.rows.push_back(step());
    if (sink) sink->write(report.rows.back());
  }
  if (sink) sink->flush();
  report.final_eval = evaluate(ema_.shadow, test_);
  return report;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config_json = to_json(cfg_);
  c.params = params_;
  c.optimizer = optimizer_;
  c.ema = ema_;
  c.thresholds = thresholds_;
  c.iteration = iteration_;
  c.sampler = sampler_.state();
  c.plan_rng = plan_rng_.serialize();
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  if (c.config_json != to_json(cfg_)) {
    throw ConfigError("checkpoint was written by a different configuration");
  }
  if (!(c.params.arch == params_.arch) || !(c.ema.shadow.arch == params_.arch)) {
    throw ConfigError("checkpoint architecture does not match");
  }
  if (c.thresholds.num_classes() != params_.arch.num_classes) {
    throw ConfigError("checkpoint threshold state has the wrong class count");
  }
  sampler_.restore(c.sampler);
  params_ = c.params;
  optimizer_ = c.optimizer;
  ema_ = c.ema;
  thresholds_ = c.thresholds;
  iteration_ = c.iteration;
  plan_rng_ = Rng::deserialize(c.plan_rng);
}

}  // namespace stuc
