#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcl/clip.hpp"

namespace pcl {

// Per-class motion descriptor. Class identity is carried by (direction,
// speed) only; shape and texture come from pools shared across classes so a
// single frame does not give the label away.
struct MotionParams {
  double direction = 0.0;  // radians
  double speed = 1.0;      // pixels per frame
  std::string shape_pool = "any";    // any | square | circle | bar
  std::string texture_pool = "any";  // any | flat | noisy
};

struct SyntheticSpec {
  int n_classes = 8;
  int videos_per_class = 40;
  int frames_per_video = 40;
  int frame_h = 32, frame_w = 32;
  std::vector<MotionParams> motion_params;  // empty -> evenly spaced directions
  double train_frac = 0.8, val_frac = 0.1;
  // Every video also carries a small class-independent sprite falling straight
  // down at this speed (0 disables it). Without it the corpus is isotropic:
  // any rotation or time reversal of a valid video is another valid video, so
  // transform-prediction pretext tasks have no signal once the static
  // background is cancelled by frame differencing.
  // slow relative to the class sprites so it orients without dominating
  double anchor_speed = 0.5;
  // sprite half-extent range as a fraction of min(frame_h, frame_w); the
  // degenerate default removes size as a per-video identity cue
  double sprite_size_lo = 0.18, sprite_size_hi = 0.18;
  // per-video sprite color range; the degenerate default removes color as an
  // identity cue, leaving motion direction as the only video-level signal
  double sprite_value_lo = 1.0, sprite_value_hi = 1.0;

  void validate() const;
  std::vector<MotionParams> resolved_motion() const;
};

// Procedural motion corpus: a textured sprite drifts over a per-video noise
// background along the class direction, wrapping at the borders. Pure
// function of (spec, seed).
Video generate_video(const SyntheticSpec& spec, const MotionParams& mp,
                     int class_idx, int video_idx, std::uint64_t seed);

// Writes manifest.tsv plus frames/<video_id>.vten under out_dir.
std::vector<VideoRecord> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                                            const std::filesystem::path& out_dir);

// In-memory variant used by tests.
Dataset generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace pcl
