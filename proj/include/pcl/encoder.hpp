#pragma once

#include <memory>
#include <string>

#include "pcl/nn.hpp"

namespace pcl {

enum class EncoderFamily { c3d_like, r3d_like, r2plus1d_like };

EncoderFamily encoder_family_from_string(const std::string& s);
std::string to_string(EncoderFamily f);

struct EncoderConfig {
  EncoderFamily family = EncoderFamily::r3d_like;
  double width_multiplier = 1.0;
  int in_frames = 16, in_h = 112, in_w = 112;
  int feature_dim = 512;

  void validate() const;
};

// Spatio-temporal clip encoder f. Three scalable families sharing the same
// stage layout: stem (spatial downsample), two strided stages, global average
// pool, linear projection to feature_dim.
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, std::uint64_t init_seed);

  // [B, 3, T, H, W] -> [B, feature_dim]
  Tensor forward(const Tensor& clip_batch);
  Tensor backward(const Tensor& grad_features);

  std::vector<ParamRef> params();
  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Sequential net_;
};

}  // namespace pcl
