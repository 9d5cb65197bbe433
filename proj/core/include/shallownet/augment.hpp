#pragma once

#include <cstdint>

#include "shallownet/rng.hpp"
#include "shallownet/tensor.hpp"

namespace shallownet {

/// Ranges for on-the-fly training augmentation.
struct AugmentParams {
  double rotation_max_deg = 20.0;
  double zoom_min = 0.9;
  double zoom_max = 1.1;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;

  /// Throws ConfigError when a range is out of bounds.
  void validate() const;
  bool operator==(const AugmentParams&) const = default;
};

/// One concrete draw of the random transform.
struct AugmentDraw {
  double angle_deg = 0.0;
  double zoom = 1.0;
  bool hflip = false;
  bool vflip = false;
};

/// Draws angle, zoom, hflip, vflip in that order (always four draws).
AugmentDraw draw_augment(const AugmentParams& params, SplitMix64& rng);

/// Rotation about the image centre then zoom about the centre, bilinear
/// sampling with nearest-edge fill, then the flips. Positive angles turn the
/// content clockwise as displayed; zoom > 1 magnifies. An identity draw
/// returns an exact copy.
Tensor apply_augment(const Tensor& image, const AugmentDraw& draw);

Tensor augment(const Tensor& image, const AugmentParams& params, SplitMix64& rng);

Tensor hflip(const Tensor& image);
Tensor vflip(const Tensor& image);

/// Seed of the augmentation stream of one sample in one epoch. Independent
/// of processing order so parallel pipelines reproduce serial ones.
std::uint64_t augment_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample_index) noexcept;

}  // namespace shallownet
