#include "stuc/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stuc {

ProbVector::ProbVector(Vector probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw ContractError("ProbVector needs at least 2 classes");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ContractError("ProbVector entry outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw ContractError("ProbVector entries do not sum to 1");
  }
}

ProbVector ProbVector::from_logits(std::span<const double> logits) {
  if (logits.size() < 2) {
    throw ContractError("softmax needs at least 2 logits");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return ProbVector(std::move(out));
}

std::size_t ProbVector::argmax() const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs_.size(); ++c) {
    if (probs_[c] > probs_[best]) best = c;
  }
  return best;
}

Embedding::Embedding(Vector z) : z_(std::move(z)) {
  if (z_.size() < 2) {
    throw ContractError("Embedding needs dimension >= 2");
  }
  for (double v : z_) {
    if (!std::isfinite(v)) throw ContractError("Embedding entry not finite");
  }
}

double Embedding::norm() const {
  return std::sqrt(std::inner_product(z_.begin(), z_.end(), z_.begin(), 0.0));
}

void BatchConfig::validate() const {
  if (labeled_batch < 1) throw ConfigError("labeled batch size must be >= 1");
  if (mu < 1) throw ConfigError("mu must be >= 1");
  if (num_classes < 2) throw ConfigError("need at least 2 classes");
  if (embed_dim < 2) throw ConfigError("embedding dimension must be >= 2");
}

double cross_entropy(std::size_t target, const ProbVector& p) {
  if (target >= p.size()) {
    throw ContractError("cross_entropy target index out of range");
  }
  return -std::log(std::max(p[target], kLogClamp));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractError("cosine_similarity dimension mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw ContractError("cosine_similarity of a zero-norm embedding");
  }
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(a.values(), b.values());
}

}  // namespace stuc
