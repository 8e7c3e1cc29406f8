#include "pcl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcl/rng.hpp"

namespace pcl {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Sprite {
  int shape;       // 0 square, 1 circle, 2 bar
  double size;     // half extent in pixels
  double color[3];
  double tex_amp;  // per-pixel texture noise amplitude
  std::uint64_t tex_seed;
};

int pick_shape(const std::string& pool, Rng& rng) {
  if (pool == "square") return 0;
  if (pool == "circle") return 1;
  if (pool == "bar") return 2;
  if (pool == "any") return uniform_int(rng, 0, 2);
  throw std::invalid_argument("unknown shape pool: " + pool);
}

bool inside(const Sprite& s, double dy, double dx) {
  switch (s.shape) {
    case 0: return std::abs(dy) <= s.size && std::abs(dx) <= s.size;
    case 1: return dy * dy + dx * dx <= s.size * s.size;
    default: return std::abs(dy) <= s.size * 0.45 && std::abs(dx) <= s.size * 1.6;
  }
}

// Value-noise background: bilinear interpolation of a coarse random grid.
struct NoiseBg {
  int gh, gw;
  std::vector<double> grid;  // gh*gw*3

  NoiseBg(int h, int w, Rng& rng) : gh(std::max(2, h / 8)), gw(std::max(2, w / 8)) {
    grid.resize(static_cast<std::size_t>(gh) * gw * 3);
    for (double& v : grid) v = uniform(rng, 0.15, 0.85);
  }
  double at(int h, int w, int y, int x, int c) const {
    double fy = y * static_cast<double>(gh - 1) / (h - 1);
    double fx = x * static_cast<double>(gw - 1) / (w - 1);
    int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
    int y1 = std::min(y0 + 1, gh - 1), x1 = std::min(x0 + 1, gw - 1);
    double wy = fy - y0, wx = fx - x0;
    auto g = [&](int yy, int xx) { return grid[(static_cast<std::size_t>(yy) * gw + xx) * 3 + c]; };
    return (g(y0, x0) * (1 - wx) + g(y0, x1) * wx) * (1 - wy) +
           (g(y1, x0) * (1 - wx) + g(y1, x1) * wx) * wy;
  }
};

}  // namespace

std::vector<MotionParams> SyntheticSpec::resolved_motion() const {
  if (!motion_params.empty()) return motion_params;
  std::vector<MotionParams> out(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    out[c].direction = 2.0 * kPi * c / n_classes;
    // fast enough that frame differences carry a clear direction signature
    out[c].speed = 2.5;
    // flat squares: sprite texture shimmers in the residual domain, and shape
    // variety hands instance discrimination a class-irrelevant shortcut
    out[c].shape_pool = "square";
    out[c].texture_pool = "flat";
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (n_classes <= 1 || videos_per_class < 3 || frames_per_video < 2 ||
      frame_h < 8 || frame_w < 8)
    throw std::invalid_argument("SyntheticSpec: degenerate sizes");
  if (!motion_params.empty() && static_cast<int>(motion_params.size()) != n_classes)
    throw std::invalid_argument("SyntheticSpec: motion_params size must equal n_classes");
  auto mp = resolved_motion();
  for (std::size_t i = 0; i < mp.size(); ++i)
    for (std::size_t j = i + 1; j < mp.size(); ++j)
      if (std::abs(mp[i].direction - mp[j].direction) < 1e-9 &&
          std::abs(mp[i].speed - mp[j].speed) < 1e-9)
        throw std::invalid_argument("SyntheticSpec: duplicate motion params for classes " +
                                    std::to_string(i) + " and " + std::to_string(j));
  if (train_frac <= 0 || val_frac < 0 || train_frac + val_frac >= 1.0)
    throw std::invalid_argument("SyntheticSpec: bad split fractions");
  if (sprite_size_lo <= 0 || sprite_size_hi < sprite_size_lo || sprite_size_hi > 0.5)
    throw std::invalid_argument("SyntheticSpec: bad sprite size range");
  if (sprite_value_lo < 0 || sprite_value_hi < sprite_value_lo || sprite_value_hi > 1.0)
    throw std::invalid_argument("SyntheticSpec: bad sprite value range");
}

Video generate_video(const SyntheticSpec& spec, const MotionParams& mp,
                     int class_idx, int video_idx, std::uint64_t seed) {
  Rng rng = make_rng(mix64(seed ^ mix64((static_cast<std::uint64_t>(class_idx) << 32) |
                                        static_cast<std::uint64_t>(video_idx))));
  int H = spec.frame_h, W = spec.frame_w, T = spec.frames_per_video;

  NoiseBg bg(H, W, rng);
  Sprite s;
  s.shape = pick_shape(mp.shape_pool, rng);
  s.size = uniform(rng, std::min(H, W) * spec.sprite_size_lo, std::min(H, W) * spec.sprite_size_hi);
  for (double& c : s.color) c = uniform(rng, spec.sprite_value_lo, spec.sprite_value_hi);
  s.tex_amp = (mp.texture_pool == "flat") ? 0.0 : uniform(rng, 0.05, 0.2);
  s.tex_seed = rng();

  double cy = uniform(rng, 0.0, H);
  double cx = uniform(rng, 0.0, W);
  double vy = -std::sin(mp.direction) * mp.speed;
  double vx = std::cos(mp.direction) * mp.speed;

  // orientation/arrow-of-time anchor: small sprite falling straight down
  Sprite a;
  a.shape = 0;
  a.size = uniform(rng, std::min(H, W) * 0.06, std::min(H, W) * 0.10);
  for (double& c : a.color) c = uniform(rng, 0.0, 1.0);
  a.tex_amp = 0.0;
  a.tex_seed = 0;
  double acy = uniform(rng, 0.0, H);
  double acx = uniform(rng, 0.0, W);

  Video v;
  v.frames = T;
  v.height = H;
  v.width = W;
  v.pixels.resize(static_cast<std::size_t>(T) * H * W * 3);

  for (int t = 0; t < T; ++t) {
    double py = cy + vy * t, px = cx + vx * t;
    double apy = acy + spec.anchor_speed * t;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        // nearest wrapped copy of each sprite centre
        double dy = y - py, dx = x - px;
        dy -= H * std::round(dy / H);
        dx -= W * std::round(dx / W);
        double ady = y - apy, adx = x - acx;
        ady -= H * std::round(ady / H);
        adx -= W * std::round(adx / W);
        for (int c = 0; c < 3; ++c) {
          double val = bg.at(H, W, y, x, c);
          if (spec.anchor_speed > 0 && inside(a, ady, adx)) val = a.color[c];
          if (inside(s, dy, dx)) {
            double tex = 0.0;
            if (s.tex_amp > 0) {
              // static texture in sprite-local coordinates
              std::uint64_t h = mix64(s.tex_seed ^ mix64((static_cast<std::uint64_t>(
                                        static_cast<int>(std::lround(dy * 2)) + 1024) << 20) ^
                                        static_cast<std::uint64_t>(
                                        static_cast<int>(std::lround(dx * 2)) + 1024)));
              tex = s.tex_amp * ((h >> 11) * 0x1.0p-53 - 0.5);
            }
            val = s.color[c] + tex;
          }
          v.pixels[((static_cast<std::size_t>(t) * H + y) * W + x) * 3 + c] =
              static_cast<std::uint8_t>(std::clamp(val, 0.0, 1.0) * 255.0 + 0.5);
        }
      }
    }
  }
  return v;
}

namespace {

std::vector<Video> generate_all(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto motion = spec.resolved_motion();
  std::vector<Video> out;
  int n_train = static_cast<int>(std::lround(spec.videos_per_class * spec.train_frac));
  int n_val = static_cast<int>(std::lround(spec.videos_per_class * spec.val_frac));
  // every class keeps at least one val and one test video
  n_val = std::max(1, n_val);
  n_train = std::clamp(n_train, 1, spec.videos_per_class - n_val - 1);
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int i = 0; i < spec.videos_per_class; ++i) {
      Video v = generate_video(spec, motion[c], c, i, seed);
      v.record.video_id = "synth_c" + std::to_string(c) + "_v" + std::to_string(i);
      v.record.path = "frames/" + v.record.video_id + ".vten";
      v.record.label = c;
      v.record.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace

std::vector<VideoRecord> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                                            const std::filesystem::path& out_dir) {
  auto videos = generate_all(spec, seed);
  std::filesystem::create_directories(out_dir / "frames");
  std::vector<VideoRecord> records;
  for (const auto& v : videos) {
    RawTensor raw;
    raw.dtype = Dtype::u8;
    raw.dims = {v.frames, v.height, v.width, 3};
    raw.bytes = v.pixels;
    write_raw_tensor(out_dir / v.record.path, raw);
    records.push_back(v.record);
  }
  write_manifest(out_dir / "manifest.tsv", records);
  return records;
}

Dataset generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  Dataset ds;
  for (auto& v : generate_all(spec, seed)) {
    std::size_t idx = ds.videos.size();
    if (v.record.split == "train")
      ds.train.push_back(idx);
    else if (v.record.split == "val")
      ds.val.push_back(idx);
    else
      ds.test.push_back(idx);
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

}  // namespace pcl
