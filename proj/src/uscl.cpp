#include "stuc/uscl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stuc {
namespace {

// d cos(a, b) / d a.
void add_cosine_grad(std::span<const double> a, std::span<const double> b,
                     double scale, Vector& out) {
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na2 += a[i] * a[i];
    nb2 += b[i] * b[i];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double cos = dot / (na * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] += scale * (b[i] / (na * nb) - cos * a[i] / na2);
  }
}

Vector mean_of(std::span<const Embedding> embeddings,
               std::span<const std::size_t> ids) {
  Vector m(embeddings[ids.front()].size(), 0.0);
  for (std::size_t id : ids) {
    const auto z = embeddings[id].values();
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += z[d];
  }
  for (double& v : m) v /= static_cast<double>(ids.size());
  return m;
}

// Logits of the InfoNCE softmax: positive first, then negatives.
Vector anchor_logits(const AnchorPlan& a, std::span<const Embedding> embeddings,
                     std::span<const double> prototype, double temperature) {
  const auto z = embeddings[a.anchor].values();
  Vector logits;
  logits.reserve(1 + a.negatives.size());
  logits.push_back(cosine_similarity(z, prototype) / temperature);
  for (std::size_t n : a.negatives) {
    logits.push_back(cosine_similarity(z, embeddings[n].values()) / temperature);
  }
  return logits;
}

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

void check_plan(const ContrastiveBatchPlan& plan, std::span<const Embedding> embeddings) {
  if (!(plan.temperature > 0.0)) throw ContractError("temperature must be positive");
  for (const auto& a : plan.anchors) {
    if (a.positives.empty() || a.negatives.empty()) {
      throw ContractError("planned anchor without positives or negatives");
    }
    if (a.anchor >= embeddings.size()) throw ContractError("anchor index out of range");
  }
  if (!plan.anchors.empty() && plan.batch_size == 0) {
    throw ContractError("contrastive plan has no batch size");
  }
}

}  // namespace

double ContrastiveBatchPlan::mean_positive_set_size() const {
  if (anchors.empty()) return 0.0;
  double total = 0.0;
  for (const auto& a : anchors) total += static_cast<double>(a.positives.size());
  return total / static_cast<double>(anchors.size());
}

RelationDistribution relation_distribution(const Embedding& anchor,
                                           std::span<const Embedding> candidates,
                                           double temperature) {
  if (candidates.empty()) throw ContractError("relation over an empty candidate list");
  if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
  Vector logits(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    logits[j] = cosine_similarity(anchor, candidates[j]) / temperature;
  }
  const double lse = log_sum_exp(logits);
  RelationDistribution out;
  out.temperature = temperature;
  out.gamma.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) out.gamma[j] = std::exp(logits[j] - lse);
  return out;
}

std::vector<std::size_t> select_positive_set(std::size_t anchor_index,
                                             const RelationDistribution& gamma_w,
                                             const RelationDistribution& gamma_s,
                                             double eps1, double eps2,
                                             std::span<const std::size_t> candidate_ids) {
  if (gamma_w.gamma.size() != gamma_s.gamma.size() ||
      gamma_w.gamma.size() != candidate_ids.size()) {
    throw ContractError("relation distributions over different candidate lists");
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < candidate_ids.size(); ++j) {
    if (candidate_ids[j] == anchor_index) continue;
    if (gamma_w.gamma[j] > eps1 && gamma_s.gamma[j] > eps2) out.push_back(candidate_ids[j]);
  }
  return out;
}

std::optional<Embedding> positive_prototype(std::span<const Embedding> members) {
  if (members.empty()) return std::nullopt;
  std::vector<std::size_t> ids(members.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return Embedding(mean_of(members, ids));
}

std::vector<std::size_t> sample_negatives(std::size_t num_candidates,
                                          std::span<const std::size_t> exclusion,
                                          std::size_t count, Rng& rng) {
  if (count < 1) throw ContractError("negative count must be >= 1");
  std::vector<bool> excluded(num_candidates, false);
  for (std::size_t e : exclusion) {
    if (e < num_candidates) excluded[e] = true;
  }
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < num_candidates; ++j) {
    if (!excluded[j]) pool.push_back(j);
  }
  if (pool.empty()) throw ContractError("no negatives available");
  const std::size_t take = std::min(count, pool.size());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.uniform_int(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

ContrastiveBatchPlan build_contrastive_plan(std::span<const Embedding> weak,
                                            std::span<const Embedding> strong,
                                            std::span<const PseudoLabelDecision> decisions,
                                            const ContrastiveParams& params, Rng& rng) {
  if (weak.size() != strong.size() || weak.size() != decisions.size()) {
    throw ContractError("contrastive plan inputs disagree on batch size");
  }
  ContrastiveBatchPlan plan;
  plan.temperature = params.temperature;
  plan.batch_size = weak.size();

  std::vector<Embedding> candidates;
  std::vector<std::size_t> candidate_ids;
  candidates.reserve(weak.size());
  for (std::size_t i = 0; i < weak.size(); ++i) {
    if (decisions[i].accepted) continue;
    if (weak.size() < 2) {
      plan.skipped.push_back(i);
      continue;
    }
    candidates.clear();
    candidate_ids.clear();
    for (std::size_t j = 0; j < weak.size(); ++j) {
      if (j == i) continue;
      candidates.push_back(weak[j]);
      candidate_ids.push_back(j);
    }
    const auto gamma_w = relation_distribution(weak[i], candidates, params.temperature);
    const auto gamma_s = relation_distribution(strong[i], candidates, params.temperature);
    AnchorPlan a;
    a.anchor = i;
    a.positives = select_positive_set(i, gamma_w, gamma_s, params.eps1, params.eps2,
                                      candidate_ids);
    // Need at least one positive and at least one remaining negative.
    if (a.positives.empty() || a.positives.size() + 1 >= weak.size()) {
      plan.skipped.push_back(i);
      continue;
    }
    std::vector<std::size_t> exclusion = a.positives;
    exclusion.push_back(i);
    a.negatives = sample_negatives(weak.size(), exclusion, params.negatives, rng);
    plan.anchors.push_back(std::move(a));
  }
  return plan;
}

double unreliable_contrastive_loss(const ContrastiveBatchPlan& plan,
                                   std::span<const Embedding> embeddings) {
  check_plan(plan, embeddings);
  if (plan.anchors.empty()) return 0.0;
  double total = 0.0;
  for (const auto& a : plan.anchors) {
    const Vector proto = mean_of(embeddings, a.positives);
    const Vector logits = anchor_logits(a, embeddings, proto, plan.temperature);
    total += log_sum_exp(logits) - logits.front();
  }
  return total / static_cast<double>(plan.batch_size);
}

ContrastiveGradient unreliable_contrastive_gradient(const ContrastiveBatchPlan& plan,
                                                    std::span<const Embedding> embeddings) {
  check_plan(plan, embeddings);
  ContrastiveGradient out;
  out.d_embeddings.assign(embeddings.size(), Vector(embeddings.empty() ? 0 : embeddings[0].size(), 0.0));
  if (plan.anchors.empty()) return out;
  const double inv_batch = 1.0 / static_cast<double>(plan.batch_size);
  const double inv_t = 1.0 / plan.temperature;
  double total = 0.0;
  for (const auto& a : plan.anchors) {
    const Vector proto = mean_of(embeddings, a.positives);
    const Vector logits = anchor_logits(a, embeddings, proto, plan.temperature);
    const double lse = log_sum_exp(logits);
    total += lse - logits.front();

    const auto z = embeddings[a.anchor].values();
    Vector& dz = out.d_embeddings[a.anchor];
    // Positive term: d/ds_p = softmax_p - 1.
    const double g_pos = (std::exp(logits[0] - lse) - 1.0) * inv_batch * inv_t;
    add_cosine_grad(z, proto, g_pos, dz);
    Vector dproto(proto.size(), 0.0);
    add_cosine_grad(proto, z, g_pos, dproto);
    const double share = 1.0 / static_cast<double>(a.positives.size());
    for (std::size_t p : a.positives) {
      for (std::size_t d = 0; d < dproto.size(); ++d) {
        out.d_embeddings[p][d] += share * dproto[d];
      }
    }
    for (std::size_t k = 0; k < a.negatives.size(); ++k) {
      const std::size_t n = a.negatives[k];
      const double g_neg = std::exp(logits[k + 1] - lse) * inv_batch * inv_t;
      add_cosine_grad(z, embeddings[n].values(), g_neg, dz);
      add_cosine_grad(embeddings[n].values(), z, g_neg, out.d_embeddings[n]);
    }
  }
  out.loss = total * inv_batch;
  return out;
}

}  // namespace stuc
