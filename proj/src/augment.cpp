#include "pcl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcl {

namespace {

struct Params {
  int crop_y = 0, crop_x = 0;
  bool flip = false;
  double brightness = 1.0, contrast = 1.0, saturation = 1.0, hue = 0.0;
  bool grayscale = false;
  bool blur = false;
  double sigma = 0.0;
};

// RGB<->HSV on [0,1] values; hue in turns.
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  double d = mx - mn;
  s = mx > 0 ? d / mx : 0.0;
  if (d <= 0) {
    h = 0;
    return;
  }
  if (mx == r)
    h = std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    h = (b - r) / d + 2.0;
  else
    h = (r - g) / d + 4.0;
  h /= 6.0;
  if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  double hh = std::fmod(h, 1.0) * 6.0;
  int i = static_cast<int>(std::floor(hh)) % 6;
  double f = hh - std::floor(hh);
  double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

void AugmentConfig::validate(int src_h, int src_w) const {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob_ok(grayscale_prob) || !prob_ok(blur_prob) || !prob_ok(flip_prob))
    throw std::invalid_argument("AugmentConfig: probabilities must be in [0,1]");
  if (crop_h <= 0 || crop_w <= 0 || crop_h > src_h || crop_w > src_w)
    throw std::invalid_argument("AugmentConfig: crop size exceeds source frame");
  if (blur_sigma_lo <= 0 || blur_sigma_hi < blur_sigma_lo)
    throw std::invalid_argument("AugmentConfig: bad blur sigma range");
}

Clip augment(const Clip& clip, const AugmentConfig& cfg, std::uint64_t seed) {
  if (clip.domain != ValueDomain::raw)
    throw std::domain_error("augment: expects a raw clip");
  cfg.validate(clip.height(), clip.width());

  if (!cfg.enabled) return center_crop(clip, cfg.crop_h, cfg.crop_w);

  Rng rng = make_rng(seed);
  Params p;
  p.crop_y = uniform_int(rng, 0, clip.height() - cfg.crop_h);
  p.crop_x = uniform_int(rng, 0, clip.width() - cfg.crop_w);
  p.flip = uniform(rng, 0, 1) < cfg.flip_prob;
  p.brightness = uniform(rng, 1.0 - cfg.brightness, 1.0 + cfg.brightness);
  p.contrast = uniform(rng, 1.0 - cfg.contrast, 1.0 + cfg.contrast);
  p.saturation = uniform(rng, 1.0 - cfg.saturation, 1.0 + cfg.saturation);
  p.hue = uniform(rng, -cfg.hue, cfg.hue);
  p.grayscale = uniform(rng, 0, 1) < cfg.grayscale_prob;
  p.blur = uniform(rng, 0, 1) < cfg.blur_prob;
  p.sigma = uniform(rng, cfg.blur_sigma_lo, cfg.blur_sigma_hi);

  int T = clip.frames(), H = cfg.crop_h, W = cfg.crop_w;
  Clip out{Tensor({3, T, H, W}), ValueDomain::raw};

  for (int t = 0; t < T; ++t) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        int sx = p.flip ? (W - 1 - x) : x;
        double r = clip.at(0, t, y + p.crop_y, sx + p.crop_x);
        double g = clip.at(1, t, y + p.crop_y, sx + p.crop_x);
        double b = clip.at(2, t, y + p.crop_y, sx + p.crop_x);
        // brightness
        r *= p.brightness;
        g *= p.brightness;
        b *= p.brightness;
        // contrast, blended against mid gray
        r = 0.5 + (r - 0.5) * p.contrast;
        g = 0.5 + (g - 0.5) * p.contrast;
        b = 0.5 + (b - 0.5) * p.contrast;
        // saturation, blended against luminance
        double lum = 0.299 * r + 0.587 * g + 0.114 * b;
        r = lum + (r - lum) * p.saturation;
        g = lum + (g - lum) * p.saturation;
        b = lum + (b - lum) * p.saturation;
        r = std::clamp(r, 0.0, 1.0);
        g = std::clamp(g, 0.0, 1.0);
        b = std::clamp(b, 0.0, 1.0);
        if (p.hue != 0.0) {
          double h, s, v;
          rgb_to_hsv(r, g, b, h, s, v);
          hsv_to_rgb(h + p.hue + 1.0, s, v, r, g, b);
        }
        if (p.grayscale) {
          double gy = 0.299 * r + 0.587 * g + 0.114 * b;
          r = g = b = gy;
        }
        out.at(0, t, y, x) = std::clamp(r, 0.0, 1.0);
        out.at(1, t, y, x) = std::clamp(g, 0.0, 1.0);
        out.at(2, t, y, x) = std::clamp(b, 0.0, 1.0);
      }
    }
  }

  if (p.blur) {
    auto k = gaussian_kernel(p.sigma);
    int radius = static_cast<int>(k.size()) / 2;
    Tensor tmp({3, T, H, W});
    // horizontal then vertical pass, edge-clamped
    for (int c = 0; c < 3; ++c)
      for (int t = 0; t < T; ++t)
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
              acc += k[i + radius] * out.at(c, t, y, std::clamp(x + i, 0, W - 1));
            tmp[((static_cast<std::size_t>(c) * T + t) * H + y) * W + x] = acc;
          }
    for (int c = 0; c < 3; ++c)
      for (int t = 0; t < T; ++t)
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
              acc += k[i + radius] *
                     tmp[((static_cast<std::size_t>(c) * T + t) * H + std::clamp(y + i, 0, H - 1)) * W + x];
            out.at(c, t, y, x) = std::clamp(acc, 0.0, 1.0);
          }
  }
  return out;
}

}  // namespace pcl
