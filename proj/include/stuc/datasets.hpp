#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stuc/augmentation.hpp"
#include "stuc/core_types.hpp"
#include "stuc/rng.hpp"

namespace stuc {

/// The part of a dataset the training loss may see: labeled examples and
/// unlabeled inputs, never the unlabeled ground truth.
struct TrainingPool {
  std::vector<LabeledExample> labeled;
  std::vector<UnlabeledExample> unlabeled;
  std::size_t num_classes = 2;
  std::size_t input_dim = 2;
  std::optional<ImageShape> image;
};

/// Ground truth of the unlabeled pool, for pseudo-label diagnostics only.
/// A label equal to num_classes marks an out-of-class distractor.
class HiddenLabels {
 public:
  HiddenLabels() = default;
  explicit HiddenLabels(std::vector<std::size_t> labels) : labels_(std::move(labels)) {}
  std::size_t at(std::size_t unlabeled_index) const { return labels_.at(unlabeled_index); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::size_t>& all() const { return labels_; }
  void push_back(std::size_t label) { labels_.push_back(label); }

 private:
  std::vector<std::size_t> labels_;
};

struct SslDataset {
  TrainingPool pool;
  HiddenLabels hidden;
};

/// Labeled evaluation data.
struct EvalSet {
  std::vector<LabeledExample> examples;
  std::size_t num_classes = 2;
};

/// Interleaved half circles, fully labeled. n/2 points per class.
SslDataset make_two_moons(std::size_t n, double noise, std::uint64_t seed);

struct BlobOptions {
  std::size_t dim = 2;
  /// One spread (stddev) per class; a single value is broadcast.
  std::vector<double> spreads{1.0};
  /// Explicit centers; default is evenly spaced on a circle of `radius`.
  std::vector<Vector> centers;
  double radius = 5.0;
};

/// C isotropic Gaussian clusters, fully labeled, round-robin class order.
SslDataset make_blobs(std::size_t num_classes, std::size_t n, const BlobOptions& options,
                      std::uint64_t seed);
SslDataset make_blobs(std::size_t num_classes, std::size_t n, double spread,
                      std::uint64_t seed);

/// Keeps exactly `labels_per_class` labeled examples per class; the rest (plus
/// any existing unlabeled samples) form the unlabeled pool.
SslDataset split_ssl(const SslDataset& dataset, std::size_t labels_per_class,
                     std::uint64_t seed);

/// Appends out-of-class inputs to the unlabeled pool, hidden-labelled
/// num_classes so they never count as a correct pseudo-label.
void add_distractors(SslDataset& dataset, const std::vector<Vector>& distractor);

/// Ground-truth view of a fully labeled dataset (for test sets).
EvalSet to_eval_set(const SslDataset& dataset);

struct LabeledBatch {
  std::vector<Vector> x;  // weakly augmented
  std::vector<std::size_t> y;
  std::vector<std::size_t> ids;
};

struct UnlabeledBatch {
  std::vector<Vector> weak;
  std::vector<Vector> strong;
  std::vector<std::size_t> ids;  // indices into the unlabeled pool
};

/// Draws labeled and unlabeled batches, cycling through a fresh random
/// permutation of each pool every epoch, and augments at draw time.
class BatchSampler {
 public:
  BatchSampler(const TrainingPool& pool, BatchConfig cfg, AugmentPolicy weak,
               AugmentPolicy strong, std::uint64_t seed);

  std::pair<LabeledBatch, UnlabeledBatch> next_batches();

  struct State {
    std::string rng;
    std::vector<std::size_t> labeled_order;
    std::size_t labeled_cursor = 0;
    std::vector<std::size_t> unlabeled_order;
    std::size_t unlabeled_cursor = 0;
    bool operator==(const State&) const = default;
  };
  State state() const;
  void restore(const State& s);

 private:
  std::size_t draw(std::vector<std::size_t>& order, std::size_t& cursor);

  const TrainingPool* pool_;
  BatchConfig cfg_;
  AugmentPolicy weak_;
  AugmentPolicy strong_;
  Rng rng_;
  std::vector<std::size_t> labeled_order_;
  std::size_t labeled_cursor_ = 0;
  std::vector<std::size_t> unlabeled_order_;
  std::size_t unlabeled_cursor_ = 0;
};

/// Single-channel 8-bit images with one label byte each.
///
/// File layout (little endian):
///   bytes 0-3   magic "TIMG"
///   u16         version (1)
///   u16         classes
///   u16         width
///   u16         height
///   u32         count
///   count x { width*height pixel bytes (row-major), 1 label byte }
struct TinyImageSet {
  std::size_t num_classes = 10;
  std::size_t width = 8;
  std::size_t height = 8;
  std::vector<std::vector<std::uint8_t>> pixels;
  std::vector<std::uint8_t> labels;

  bool operator==(const TinyImageSet&) const = default;
};

inline constexpr std::uint16_t kTinyImageVersion = 1;

std::vector<std::uint8_t> encode_tiny_images(const TinyImageSet& set);
TinyImageSet decode_tiny_images(const std::vector<std::uint8_t>& bytes);
void write_tiny_images(const std::string& path, const TinyImageSet& set);
TinyImageSet read_tiny_images(const std::string& path);

/// Synthetic digit-like images: each class is a fixed set of strokes, drawn
/// with a random +-1 px offset and pixel noise.
TinyImageSet make_tiny_digits(std::size_t num_classes, std::size_t n, std::size_t side,
                              std::uint64_t seed);

/// Fully labeled dataset with pixels scaled to [0, 1].
SslDataset to_dataset(const TinyImageSet& set);

}  // namespace stuc
