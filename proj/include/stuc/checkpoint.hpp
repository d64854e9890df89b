#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stuc/datasets.hpp"
#include "stuc/model.hpp"
#include "stuc/satpl.hpp"

namespace stuc {

/// Complete resumable training state.
struct Checkpoint {
  std::string config_json;
  ModelParams params;
  SgdMomentum optimizer;
  EmaShadow ema;
  ThresholdState thresholds;
  std::uint64_t iteration = 0;
  BatchSampler::State sampler;
  std::string plan_rng;

  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: magic "STUCCKPT", u32 version, then every field in
/// declaration order. Integers are little-endian u64, doubles their IEEE-754
/// bit pattern as u64, strings and arrays a u64 length prefix.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace stuc
