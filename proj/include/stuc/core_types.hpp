#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stuc {

/// Raised when a caller violates a documented precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for invalid or contradictory configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a loss, gradient or parameter becomes non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on file read/write failures and malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

inline constexpr double kProbSumTolerance = 1e-6;
inline constexpr double kLogClamp = 1e-12;

/// Categorical distribution over C >= 2 classes, stored post-softmax.
class ProbVector {
 public:
  /// Validates length, range and the sum-to-one tolerance.
  explicit ProbVector(Vector probs);

  /// Numerically stable softmax over raw logits.
  static ProbVector from_logits(std::span<const double> logits);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t c) const { return probs_[c]; }
  std::span<const double> values() const { return probs_; }

  /// Lowest index among the maximal entries.
  std::size_t argmax() const;
  double max() const { return probs_[argmax()]; }

  bool operator==(const ProbVector&) const = default;

 private:
  Vector probs_;
};

/// Feature-space vector produced by the encoder.
class Embedding {
 public:
  explicit Embedding(Vector z);

  std::size_t size() const { return z_.size(); }
  double operator[](std::size_t i) const { return z_[i]; }
  std::span<const double> values() const { return z_; }
  double norm() const;

  bool operator==(const Embedding&) const = default;

 private:
  Vector z_;
};

struct LabeledExample {
  Vector x;
  std::size_t y = 0;
};

struct UnlabeledExample {
  Vector u;
};

/// Batch geometry: B labeled samples and mu*B unlabeled samples per step.
struct BatchConfig {
  std::size_t labeled_batch = 64;
  std::size_t mu = 7;
  std::size_t num_classes = 10;
  std::size_t embed_dim = 16;

  std::size_t unlabeled_batch() const { return mu * labeled_batch; }
  void validate() const;
};

/// -log(p[target]) with p[target] clamped to at least 1e-12.
double cross_entropy(std::size_t target, const ProbVector& p);

/// Cosine of the angle between two non-zero embeddings.
double cosine_similarity(const Embedding& a, const Embedding& b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace stuc
