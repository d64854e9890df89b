#include "stuc/augmentation.hpp"

#include <algorithm>

namespace stuc {
namespace {

void check_image(const Vector& x, const ImageShape& shape) {
  if (x.size() != shape.pixels()) {
    throw ContractError("image input does not match the policy geometry");
  }
}

Vector flip_horizontal(const Vector& x, const ImageShape& shape) {
  Vector out(x.size());
  for (std::size_t r = 0; r < shape.height; ++r) {
    for (std::size_t c = 0; c < shape.width; ++c) {
      out[r * shape.width + c] = x[r * shape.width + (shape.width - 1 - c)];
    }
  }
  return out;
}

// Translation with zero fill.
Vector shift(const Vector& x, const ImageShape& shape, long dx, long dy) {
  Vector out(x.size(), 0.0);
  const long w = static_cast<long>(shape.width);
  const long h = static_cast<long>(shape.height);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const long sr = r - dy;
      const long sc = c - dx;
      if (sr < 0 || sr >= h || sc < 0 || sc >= w) continue;
      out[r * w + c] = x[sr * w + sc];
    }
  }
  return out;
}

long draw_shift(std::size_t max_shift, Rng& rng) {
  if (max_shift == 0) return 0;
  return static_cast<long>(rng.uniform_int(2 * max_shift + 1)) -
         static_cast<long>(max_shift);
}

Vector geometric(const Vector& x, const AugmentPolicy& p, Rng& rng) {
  const ImageShape& shape = *p.image;
  check_image(x, shape);
  Vector out = x;
  if (p.flip_prob > 0.0 && rng.bernoulli(p.flip_prob)) {
    out = flip_horizontal(out, shape);
  }
  if (p.max_shift > 0) {
    const long dx = draw_shift(p.max_shift, rng);
    const long dy = draw_shift(p.max_shift, rng);
    out = shift(out, shape, dx, dy);
  }
  return out;
}

void add_noise(Vector& x, double stddev, Rng& rng) {
  if (stddev <= 0.0) return;
  for (double& v : x) v += rng.normal(0.0, stddev);
}

}  // namespace

AugmentPolicy AugmentPolicy::weak_vector(double noise_std) {
  AugmentPolicy p;
  p.kind = AugmentKind::kWeak;
  p.noise_std = noise_std;
  return p;
}

AugmentPolicy AugmentPolicy::strong_vector(double noise_std, double dropout_prob) {
  AugmentPolicy p;
  p.kind = AugmentKind::kStrong;
  p.noise_std = noise_std;
  p.dropout_prob = dropout_prob;
  return p;
}

AugmentPolicy AugmentPolicy::weak_image(ImageShape shape, double flip_prob,
                                        std::size_t max_shift) {
  AugmentPolicy p;
  p.kind = AugmentKind::kWeak;
  p.flip_prob = flip_prob;
  p.max_shift = max_shift;
  p.image = shape;
  return p;
}

AugmentPolicy AugmentPolicy::strong_image(ImageShape shape, double flip_prob,
                                          std::size_t max_shift, double noise_std,
                                          std::size_t erase_size) {
  AugmentPolicy p;
  p.kind = AugmentKind::kStrong;
  p.flip_prob = flip_prob;
  p.max_shift = max_shift;
  p.noise_std = noise_std;
  p.erase_size = erase_size;
  p.image = shape;
  return p;
}

void validate_policy_pair(const AugmentPolicy& weak, const AugmentPolicy& strong) {
  if (weak.kind != AugmentKind::kWeak || strong.kind != AugmentKind::kStrong) {
    throw ConfigError("augmentation policy kinds are swapped");
  }
  if (weak.noise_std < 0 || weak.dropout_prob < 0 || weak.dropout_prob > 1 ||
      strong.dropout_prob < 0 || strong.dropout_prob > 1 || weak.flip_prob < 0 ||
      weak.flip_prob > 1 || strong.flip_prob < 0 || strong.flip_prob > 1) {
    throw ConfigError("augmentation parameter out of range");
  }
  const bool dominated = strong.noise_std >= weak.noise_std &&
                         strong.dropout_prob >= weak.dropout_prob &&
                         strong.max_shift >= weak.max_shift &&
                         strong.erase_size >= weak.erase_size;
  const bool strictly = strong.noise_std > weak.noise_std ||
                        strong.dropout_prob > weak.dropout_prob ||
                        strong.max_shift > weak.max_shift ||
                        strong.erase_size > weak.erase_size;
  if (!dominated || !strictly) {
    throw ConfigError("strong augmentation must strictly dominate weak augmentation");
  }
  if (weak.image.has_value() != strong.image.has_value()) {
    throw ConfigError("weak and strong policies disagree on input kind");
  }
}

Vector augment_weak(const Vector& x, const AugmentPolicy& policy, Rng& rng) {
  if (policy.kind != AugmentKind::kWeak) {
    throw ContractError("augment_weak called with a strong policy");
  }
  Vector out = policy.image ? geometric(x, policy, rng) : x;
  add_noise(out, policy.noise_std, rng);
  return out;
}

Vector augment_strong(const Vector& x, const AugmentPolicy& policy, Rng& rng) {
  if (policy.kind != AugmentKind::kStrong) {
    throw ContractError("augment_strong called with a weak policy");
  }
  Vector out = policy.image ? geometric(x, policy, rng) : x;
  add_noise(out, policy.noise_std, rng);
  if (policy.dropout_prob > 0.0) {
    for (double& v : out) {
      if (rng.bernoulli(policy.dropout_prob)) v = 0.0;
    }
  }
  if (policy.image && policy.erase_size > 0) {
    const ImageShape& shape = *policy.image;
    const std::size_t side =
        std::min({policy.erase_size, shape.width, shape.height});
    const std::size_t r0 = rng.uniform_int(shape.height - side + 1);
    const std::size_t c0 = rng.uniform_int(shape.width - side + 1);
    for (std::size_t r = r0; r < r0 + side; ++r) {
      for (std::size_t c = c0; c < c0 + side; ++c) out[r * shape.width + c] = 0.0;
    }
  }
  return out;
}

}  // namespace stuc
