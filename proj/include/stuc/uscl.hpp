#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stuc/core_types.hpp"
#include "stuc/rng.hpp"
#include "stuc/satpl.hpp"

namespace stuc {

inline constexpr double kDefaultContrastTemperature = 0.1;
inline constexpr double kDefaultEps1 = 0.8;
inline constexpr double kDefaultEps2 = 0.6;
inline constexpr std::size_t kDefaultNegatives = 16;

/// Softmax over temperature-scaled cosine similarities to a candidate list.
struct RelationDistribution {
  Vector gamma;
  double temperature = kDefaultContrastTemperature;
};

struct ContrastiveParams {
  double eps1 = kDefaultEps1;
  double eps2 = kDefaultEps2;
  double temperature = kDefaultContrastTemperature;
  std::size_t negatives = kDefaultNegatives;
};

/// Loss inputs for one unreliable sample. All indices refer to positions in
/// the unlabeled batch.
struct AnchorPlan {
  std::size_t anchor = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

struct ContrastiveBatchPlan {
  std::vector<AnchorPlan> anchors;
  /// Unreliable samples left out because no positive (or no negative) exists.
  std::vector<std::size_t> skipped;
  double temperature = kDefaultContrastTemperature;
  /// Normaliser of the loss: the unlabeled batch size.
  std::size_t batch_size = 0;

  double mean_positive_set_size() const;
};

RelationDistribution relation_distribution(const Embedding& anchor,
                                           std::span<const Embedding> candidates,
                                           double temperature);

/// Indices j into `candidate_ids` with gamma_w[j] > eps1 and gamma_s[j] > eps2,
/// returned as batch indices. The anchor itself is never selected.
std::vector<std::size_t> select_positive_set(std::size_t anchor_index,
                                             const RelationDistribution& gamma_w,
                                             const RelationDistribution& gamma_s,
                                             double eps1, double eps2,
                                             std::span<const std::size_t> candidate_ids);

/// Elementwise mean; nullopt when the set is empty.
std::optional<Embedding> positive_prototype(std::span<const Embedding> members);

/// Uniform draw without replacement of min(count, available) indices from
/// [0, num_candidates) minus `exclusion`, in draw order.
std::vector<std::size_t> sample_negatives(std::size_t num_candidates,
                                          std::span<const std::size_t> exclusion,
                                          std::size_t count, Rng& rng);

/// Builds the per-anchor positive sets and negatives for every rejected sample.
/// Candidates for an anchor are the weak-view embeddings of all other samples.
ContrastiveBatchPlan build_contrastive_plan(std::span<const Embedding> weak,
                                            std::span<const Embedding> strong,
                                            std::span<const PseudoLabelDecision> decisions,
                                            const ContrastiveParams& params, Rng& rng);

/// Mean over the batch of the InfoNCE term of every planned anchor, with the
/// prototype and negatives taken from `embeddings` (weak views).
double unreliable_contrastive_loss(const ContrastiveBatchPlan& plan,
                                   std::span<const Embedding> embeddings);

struct ContrastiveGradient {
  double loss = 0.0;
  /// d loss / d embedding, one row per batch sample.
  std::vector<Vector> d_embeddings;
};

ContrastiveGradient unreliable_contrastive_gradient(const ContrastiveBatchPlan& plan,
                                                    std::span<const Embedding> embeddings);

}  // namespace stuc
