#include "pcl/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace pcl {

namespace {

constexpr int kBaseWidths[3] = {16, 32, 64};

int scaled(int base, double mult) {
  return std::max(1, static_cast<int>(std::lround(base * mult)));
}

std::unique_ptr<Conv3d> conv(int ci, int co, std::array<int, 3> k, std::array<int, 3> s,
                             std::array<int, 3> p, Rng& rng) {
  return std::make_unique<Conv3d>(ci, co, k, s, p, rng);
}

// Factorized (2+1)D unit: spatial 1x3x3 then temporal 3x1x1 with a rectifier
// between, mid width = out width.
void add_2plus1d(Sequential& seq, int ci, int co, std::array<int, 3> stride, Rng& rng) {
  seq.add(conv(ci, co, {1, 3, 3}, {1, stride[1], stride[2]}, {0, 1, 1}, rng));
  seq.add(std::make_unique<ReLU>());
  seq.add(conv(co, co, {3, 1, 1}, {stride[0], 1, 1}, {1, 0, 0}, rng));
}

std::unique_ptr<ResidualBlock> res_block(int ci, int co, std::array<int, 3> stride,
                                         bool factorized, Rng& rng) {
  auto body = std::make_unique<Sequential>();
  if (factorized) {
    add_2plus1d(*body, ci, co, stride, rng);
    body->add(std::make_unique<ReLU>());
    add_2plus1d(*body, co, co, {1, 1, 1}, rng);
  } else {
    body->add(conv(ci, co, {3, 3, 3}, stride, {1, 1, 1}, rng));
    body->add(std::make_unique<ReLU>());
    body->add(conv(co, co, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng));
  }
  std::unique_ptr<Layer> shortcut;
  if (ci != co || stride != std::array<int, 3>{1, 1, 1})
    shortcut = conv(ci, co, {1, 1, 1}, stride, {0, 0, 0}, rng);
  return std::make_unique<ResidualBlock>(std::move(body), std::move(shortcut));
}

}  // namespace

EncoderFamily encoder_family_from_string(const std::string& s) {
  if (s == "c3d_like") return EncoderFamily::c3d_like;
  if (s == "r3d_like") return EncoderFamily::r3d_like;
  if (s == "r2plus1d_like") return EncoderFamily::r2plus1d_like;
  throw std::invalid_argument("unknown encoder family: " + s);
}

std::string to_string(EncoderFamily f) {
  switch (f) {
    case EncoderFamily::c3d_like: return "c3d_like";
    case EncoderFamily::r3d_like: return "r3d_like";
    case EncoderFamily::r2plus1d_like: return "r2plus1d_like";
  }
  return "?";
}

void EncoderConfig::validate() const {
  if (width_multiplier <= 0) throw std::invalid_argument("width_multiplier: must be > 0");
  if (feature_dim <= 0) throw std::invalid_argument("feature_dim: must be > 0");
  if (in_frames < 4 || in_h < 8 || in_w < 8)
    throw std::invalid_argument("in_frames/in_h/in_w: input too small");
}

Encoder::Encoder(const EncoderConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg.validate();
  Rng rng = make_rng(init_seed);
  const int c1 = scaled(kBaseWidths[0], cfg.width_multiplier);
  const int c2 = scaled(kBaseWidths[1], cfg.width_multiplier);
  const int c3 = scaled(kBaseWidths[2], cfg.width_multiplier);

  switch (cfg.family) {
    case EncoderFamily::c3d_like:
      // plain conv stack
      net_.add(conv(3, c1, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}, rng));
      net_.add(std::make_unique<ReLU>());
      net_.add(conv(c1, c2, {3, 3, 3}, {2, 2, 2}, {1, 1, 1}, rng));
      net_.add(std::make_unique<ReLU>());
      net_.add(conv(c2, c2, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng));
      net_.add(std::make_unique<ReLU>());
      net_.add(conv(c2, c3, {3, 3, 3}, {2, 2, 2}, {1, 1, 1}, rng));
      net_.add(std::make_unique<ReLU>());
      net_.add(conv(c3, c3, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng));
      net_.add(std::make_unique<ReLU>());
      break;
    case EncoderFamily::r3d_like:
      net_.add(conv(3, c1, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}, rng));
      net_.add(std::make_unique<ReLU>());
      net_.add(res_block(c1, c2, {2, 2, 2}, false, rng));
      net_.add(res_block(c2, c3, {2, 2, 2}, false, rng));
      break;
    case EncoderFamily::r2plus1d_like:
      add_2plus1d(net_, 3, c1, {1, 2, 2}, rng);
      net_.add(std::make_unique<ReLU>());
      net_.add(res_block(c1, c2, {2, 2, 2}, true, rng));
      net_.add(res_block(c2, c3, {2, 2, 2}, true, rng));
      break;
  }
  net_.add(std::make_unique<GlobalAvgPool3d>());
  net_.add(std::make_unique<Linear>(c3, cfg.feature_dim, rng));
}

Tensor Encoder::forward(const Tensor& clip_batch) {
  if (clip_batch.rank() != 5 || clip_batch.dim(1) != 3 || clip_batch.dim(2) != cfg_.in_frames ||
      clip_batch.dim(3) != cfg_.in_h || clip_batch.dim(4) != cfg_.in_w)
    throw std::invalid_argument("Encoder: input " + clip_batch.shape_str() + " does not match [B,3," +
                                std::to_string(cfg_.in_frames) + "," + std::to_string(cfg_.in_h) +
                                "," + std::to_string(cfg_.in_w) + "]");
  Tensor feats = net_.forward(clip_batch);
  check_finite(feats, "encoder features");
  return feats;
}

Tensor Encoder::backward(const Tensor& grad_features) { return net_.backward(grad_features); }

std::vector<ParamRef> Encoder::params() {
  std::vector<ParamRef> out;
  net_.collect_params("encoder", out);
  return out;
}

}  // namespace pcl
