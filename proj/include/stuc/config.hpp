#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stuc/core_types.hpp"

namespace stuc {

/// Which components of the method are active.
enum class TrainMode {
  kFull,            // adaptive thresholds + contrastive loss on unreliable samples
  kFixedThreshold,  // constant threshold, no contrastive loss
  kSatplOnly,       // adaptive thresholds, no contrastive loss
  kUsclOnly,        // constant threshold + contrastive loss
};

std::string to_string(TrainMode m);
TrainMode mode_from_string(const std::string& name);
bool uses_adaptive_threshold(TrainMode m);
bool uses_contrastive(TrainMode m);

enum class DataKind { kTwoMoons, kBlobs, kTinyImages };

struct DataConfig {
  DataKind kind = DataKind::kTwoMoons;
  std::size_t n = 1000;
  double noise = 0.1;
  std::size_t classes = 2;
  std::vector<double> spreads{1.0};
  std::size_t dim = 2;
  std::string path;  // tiny image file; empty generates synthetic digits
  std::size_t image_side = 8;
  std::size_t labels_per_class = 4;
  std::size_t test_n = 1000;
  double distractor_fraction = 0.0;
};

struct AugmentConfig {
  double weak_noise = 0.05;
  double strong_noise = 0.15;
  double strong_dropout = 0.0;
  double flip_prob = 0.5;
  std::size_t max_shift = 1;
  double image_noise = 0.1;
  std::size_t erase_size = 3;
};

struct ModelConfig {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t embed_dim = 16;
  std::string activation = "elu";
};

struct TrainConfig {
  std::size_t iterations = 2000;
  BatchConfig batch{8, 7, 2, 16};
  ModelConfig model;
  DataConfig data;
  AugmentConfig augment;
  TrainMode mode = TrainMode::kFull;
  double threshold_decay = 0.999;
  double fixed_threshold = 0.95;
  std::size_t status_window = 0;  // batches; 0 = one pass over the unlabeled pool
  double lambda_u = 1.0;
  double lambda_c0 = 1.0;
  double eps1 = 0.8;
  double eps2 = 0.6;
  double temperature = 0.1;
  std::size_t negatives = 16;
  double lr = 0.03;
  double momentum = 0.9;
  double weight_decay = 0.0;
  bool cosine_lr = false;
  double ema_decay = 0.999;
  std::size_t eval_interval = 200;
  std::uint64_t seed = 0;

  /// Throws ConfigError on out-of-range or contradictory values.
  void validate() const;
};

std::string to_json(const TrainConfig& cfg);
/// Parses a JSON document. Unknown keys are errors; missing keys keep defaults.
TrainConfig config_from_json(const std::string& text);
TrainConfig load_config(const std::string& path);
void save_config(const std::string& path, const TrainConfig& cfg);

}  // namespace stuc
