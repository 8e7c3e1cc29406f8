#include "pcl/clip.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pcl {

const std::vector<std::size_t>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw std::invalid_argument("unknown split: " + name);
}

int Dataset::n_classes() const {
  int n = 0;
  for (const auto& v : videos)
    if (v.record.label) n = std::max(n, *v.record.label + 1);
  return n;
}

Video load_video(const std::filesystem::path& manifest_dir, const VideoRecord& rec) {
  RawTensor raw = read_raw_tensor(manifest_dir / rec.path);
  if (raw.dtype != Dtype::u8 || raw.dims.size() != 4 || raw.dims[3] != 3)
    throw std::runtime_error("video container must be u8 [T,H,W,3]: " + rec.path);
  Video v;
  v.record = rec;
  v.frames = raw.dims[0];
  v.height = raw.dims[1];
  v.width = raw.dims[2];
  v.pixels = std::move(raw.bytes);
  return v;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  auto records = read_manifest(manifest_path);
  auto dir = manifest_path.parent_path();
  Dataset ds;
  std::set<std::string> seen;
  for (const auto& rec : records) {
    if (!seen.insert(rec.video_id).second)
      throw std::runtime_error("duplicate video_id in manifest: " + rec.video_id);
    std::size_t idx = ds.videos.size();
    ds.videos.push_back(load_video(dir, rec));
    if (rec.split == "train")
      ds.train.push_back(idx);
    else if (rec.split == "val")
      ds.val.push_back(idx);
    else if (rec.split == "test")
      ds.test.push_back(idx);
    else
      throw std::runtime_error("unknown split '" + rec.split + "' for " + rec.video_id);
  }
  return ds;
}

namespace {

// Bilinear sample of one source frame channel at fractional (fy, fx).
double bilerp(const Video& v, int t, double fy, double fx, int c) {
  int y0 = static_cast<int>(std::floor(fy));
  int x0 = static_cast<int>(std::floor(fx));
  int y1 = std::min(y0 + 1, v.height - 1);
  int x1 = std::min(x0 + 1, v.width - 1);
  double wy = fy - y0, wx = fx - x0;
  double a = v.px(t, y0, x0, c) * (1 - wx) + v.px(t, y0, x1, c) * wx;
  double b = v.px(t, y1, x0, c) * (1 - wx) + v.px(t, y1, x1, c) * wx;
  return (a * (1 - wy) + b * wy) / 255.0;
}

}  // namespace

Clip sample_clip(const Video& video, int start_frame, int n_frames,
                 int resize_h, int resize_w) {
  if (n_frames <= 0) throw std::invalid_argument("sample_clip: n_frames must be > 0");
  if (start_frame < 0 || start_frame + n_frames > video.frames)
    throw std::out_of_range("sample_clip: frame range [" + std::to_string(start_frame) + "," +
                            std::to_string(start_frame + n_frames) + ") exceeds video length " +
                            std::to_string(video.frames));
  int out_h = resize_h > 0 ? resize_h : video.height;
  int out_w = resize_w > 0 ? resize_w : video.width;
  Clip clip{Tensor({3, n_frames, out_h, out_w}), ValueDomain::raw};
  bool resize = out_h != video.height || out_w != video.width;
  for (int t = 0; t < n_frames; ++t) {
    int st = start_frame + t;
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        if (!resize) {
          for (int c = 0; c < 3; ++c) clip.at(c, t, y, x) = video.px(st, y, x, c) / 255.0;
        } else {
          double fy = (out_h > 1) ? y * static_cast<double>(video.height - 1) / (out_h - 1) : 0.0;
          double fx = (out_w > 1) ? x * static_cast<double>(video.width - 1) / (out_w - 1) : 0.0;
          for (int c = 0; c < 3; ++c) clip.at(c, t, y, x) = bilerp(video, st, fy, fx, c);
        }
      }
    }
  }
  return clip;
}

Clip to_residual(const Clip& clip_plus_one) {
  if (clip_plus_one.domain != ValueDomain::raw)
    throw std::domain_error("to_residual: input must be a raw clip");
  if (clip_plus_one.frames() < 2)
    throw std::invalid_argument("to_residual: need at least 2 frames");
  int T = clip_plus_one.frames() - 1;
  int H = clip_plus_one.height(), W = clip_plus_one.width();
  Clip out{Tensor({3, T, H, W}), ValueDomain::residual};
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < T; ++t)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          out.at(c, t, y, x) = clip_plus_one.at(c, t + 1, y, x) - clip_plus_one.at(c, t, y, x);
  return out;
}

Clip center_crop(const Clip& clip, int crop_h, int crop_w) {
  if (crop_h > clip.height() || crop_w > clip.width())
    throw std::invalid_argument("center_crop: crop larger than frame");
  int oy = (clip.height() - crop_h) / 2;
  int ox = (clip.width() - crop_w) / 2;
  Clip out{Tensor({3, clip.frames(), crop_h, crop_w}), clip.domain};
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < clip.frames(); ++t)
      for (int y = 0; y < crop_h; ++y)
        for (int x = 0; x < crop_w; ++x)
          out.at(c, t, y, x) = clip.at(c, t, y + oy, x + ox);
  return out;
}

}  // namespace pcl
