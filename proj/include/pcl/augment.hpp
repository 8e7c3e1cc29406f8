#pragma once

#include <cstdint>

#include "pcl/clip.hpp"
#include "pcl/rng.hpp"

namespace pcl {

// Strong augmentation settings; all parameters are sampled once per call and
// applied identically to every frame of the clip.
struct AugmentConfig {
  int crop_h = 112, crop_w = 112;
  double brightness = 0.4;   // factor in [1-b, 1+b]
  double contrast = 0.4;     // factor in [1-c, 1+c]
  double saturation = 0.4;   // factor in [1-s, 1+s]
  double hue = 0.1;          // shift in [-h, h] turns
  double grayscale_prob = 0.2;
  double blur_prob = 0.5;
  double blur_sigma_lo = 0.1, blur_sigma_hi = 2.0;
  double flip_prob = 0.5;
  bool enabled = true;

  void validate(int src_h, int src_w) const;
};

// Random crop + flip + color jitter + grayscale + Gaussian blur, clipped to
// [0,1]. With enabled=false only a center crop is applied. Deterministic for
// a given seed.
Clip augment(const Clip& clip, const AugmentConfig& cfg, std::uint64_t seed);

}  // namespace pcl
