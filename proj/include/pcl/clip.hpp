#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcl/io.hpp"
#include "pcl/tensor.hpp"

namespace pcl {

enum class ValueDomain { raw, residual };

// Stacked frames, [3, T, H, W]. Raw clips live in [0,1], residual clips
// (temporal frame differences) in [-1,1].
struct Clip {
  Tensor data;  // [3, T, H, W]
  ValueDomain domain = ValueDomain::raw;

  int channels() const { return data.dim(0); }
  int frames() const { return data.dim(1); }
  int height() const { return data.dim(2); }
  int width() const { return data.dim(3); }

  double& at(int c, int t, int y, int x) {
    return data[((static_cast<std::size_t>(c) * frames() + t) * height() + y) * width() + x];
  }
  double at(int c, int t, int y, int x) const {
    return data[((static_cast<std::size_t>(c) * frames() + t) * height() + y) * width() + x];
  }
};

// Decoded video held in memory: uint8 frames [T, H, W, 3].
struct Video {
  VideoRecord record;
  int frames = 0, height = 0, width = 0;
  std::vector<std::uint8_t> pixels;  // T*H*W*3

  std::uint8_t px(int t, int y, int x, int c) const {
    return pixels[((static_cast<std::size_t>(t) * height + y) * width + x) * 3 + c];
  }
};

struct Dataset {
  std::vector<Video> videos;
  std::vector<std::size_t> train, val, test;  // indices into videos

  const std::vector<std::size_t>& split(const std::string& name) const;
  int n_classes() const;
};

Video load_video(const std::filesystem::path& manifest_dir, const VideoRecord& rec);
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Consecutive frames [start, start+n), converted to float in [0,1]. Optional
// bilinear resize to (resize_h, resize_w) when both are > 0.
Clip sample_clip(const Video& video, int start_frame, int n_frames,
                 int resize_h = 0, int resize_w = 0);

// T+1 raw frames in, T residual frames out: frame k = in[k+1] - in[k].
Clip to_residual(const Clip& clip_plus_one);

Clip center_crop(const Clip& clip, int crop_h, int crop_w);

}  // namespace pcl
