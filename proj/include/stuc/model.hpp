#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stuc/core_types.hpp"
#include "stuc/rng.hpp"
#include "stuc/satpl.hpp"
#include "stuc/uscl.hpp"

namespace stuc {

enum class Activation { kRelu, kElu, kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Encoder input -> hidden... -> embed (no activation on the embedding layer),
/// followed by a linear classifier embed -> num_classes.
struct Architecture {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t embed_dim = 16;
  std::size_t num_classes = 2;
  Activation activation = Activation::kElu;

  void validate() const;
  std::size_t parameter_count() const;
  bool operator==(const Architecture&) const = default;
};

/// Offsets of one dense layer's weights (out x in, row-major) and bias.
struct LayerLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerLayout> layer_layouts(const Architecture& arch);

/// Trainable parameters as one flat array plus the immutable architecture.
struct ModelParams {
  Architecture arch;
  Vector values;

  static ModelParams zeros(const Architecture& arch);
  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static ModelParams init(const Architecture& arch, Rng& rng);
  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;
};

/// Intermediate values of one sample's forward pass.
struct ForwardCache {
  std::vector<Vector> inputs;  // input of every encoder layer
  std::vector<Vector> pre;     // pre-activation of every encoder layer
  Vector embedding;
  Vector logits;
  Vector probs;
};

std::pair<Embedding, ProbVector> forward(const ModelParams& params, const Vector& x);
ForwardCache forward_cached(const ModelParams& params, const Vector& x);

/// Accumulates into `grad` the parameter gradient given upstream gradients at
/// the logits and at the embedding.
void backward_sample(const ModelParams& params, const ForwardCache& cache,
                     std::span<const double> d_logits,
                     std::span<const double> d_embedding, Vector& grad);

/// Everything the composite objective needs for one iteration. Pseudo-label
/// decisions and the contrastive plan are fixed inputs: they carry no gradient.
struct CompositeBatch {
  std::vector<Vector> labeled_x;
  std::vector<std::size_t> labels;
  std::vector<Vector> weak_u;
  std::vector<Vector> strong_u;
  std::vector<PseudoLabelDecision> decisions;
  ContrastiveBatchPlan plan;
};

struct LossWeights {
  double lambda_u = 1.0;
  double lambda_c = 1.0;
};

struct LossTerms {
  double supervised = 0.0;
  double unsupervised = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
};

/// Forward-only evaluation of L_s + lambda_u L_u + lambda_c L_c.
LossTerms evaluate_losses(const ModelParams& params, const CompositeBatch& batch,
                          const LossWeights& weights);

struct GradientResult {
  LossTerms terms;
  Vector grad;
};

/// Exact reverse-mode gradient of the composite loss. Terms with zero weight
/// are not evaluated. Throws NumericalError naming the offending term when a
/// loss or gradient is non-finite.
GradientResult composite_gradient(const ModelParams& params, const CompositeBatch& batch,
                                  const LossWeights& weights);

/// Heavy-ball SGD: v <- momentum * v + (g + weight_decay * theta); theta -= lr * v.
class SgdMomentum {
 public:
  SgdMomentum() = default;
  SgdMomentum(std::size_t size, double momentum, double weight_decay = 0.0);

  void step(ModelParams& params, std::span<const double> grads, double lr);

  const Vector& velocity() const { return velocity_; }
  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }
  static SgdMomentum restore(Vector velocity, double momentum, double weight_decay);

  bool operator==(const SgdMomentum&) const = default;

 private:
  Vector velocity_;
  double momentum_ = 0.9;
  double weight_decay_ = 0.0;
};

/// Exponential moving average of parameters used for evaluation.
struct EmaShadow {
  ModelParams shadow;
  double decay = 0.999;

  static EmaShadow of(const ModelParams& params, double decay);
  void update(const ModelParams& params);
  bool operator==(const EmaShadow&) const = default;
};

}  // namespace stuc
