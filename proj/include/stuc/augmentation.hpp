#pragma once

#include <cstddef>
#include <optional>

#include "stuc/core_types.hpp"
#include "stuc/rng.hpp"

namespace stuc {

enum class AugmentKind { kWeak, kStrong };

/// Row-major single-channel image geometry.
struct ImageShape {
  std::size_t width = 8;
  std::size_t height = 8;
  std::size_t pixels() const { return width * height; }
};

/// Stochastic input perturbation. When `image` is set the input is treated as
/// a row-major image and flip/shift/erase apply; otherwise only additive noise
/// and coordinate dropout do.
struct AugmentPolicy {
  AugmentKind kind = AugmentKind::kWeak;
  double noise_std = 0.0;
  double dropout_prob = 0.0;
  double flip_prob = 0.0;
  std::size_t max_shift = 0;
  std::size_t erase_size = 0;
  std::optional<ImageShape> image;

  static AugmentPolicy weak_vector(double noise_std);
  static AugmentPolicy strong_vector(double noise_std, double dropout_prob);
  static AugmentPolicy weak_image(ImageShape shape, double flip_prob = 0.5,
                                  std::size_t max_shift = 2);
  static AugmentPolicy strong_image(ImageShape shape, double flip_prob = 0.5,
                                    std::size_t max_shift = 2,
                                    double noise_std = 0.1,
                                    std::size_t erase_size = 3);
};

/// Throws ConfigError unless every strong parameter is at least the weak one
/// and the strong envelope is strictly larger overall.
void validate_policy_pair(const AugmentPolicy& weak, const AugmentPolicy& strong);

Vector augment_weak(const Vector& x, const AugmentPolicy& policy, Rng& rng);
Vector augment_strong(const Vector& x, const AugmentPolicy& policy, Rng& rng);

}  // namespace stuc
