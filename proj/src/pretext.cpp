#include "pcl/pretext.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "pcl/heads.hpp"

namespace pcl {

PretextTaskKind pretext_task_from_string(const std::string& s) {
  if (s == "none") return PretextTaskKind::none;
  if (s == "rotation") return PretextTaskKind::rotation;
  if (s == "clip_order") return PretextTaskKind::clip_order;
  if (s == "transform") return PretextTaskKind::transform;
  throw std::invalid_argument("unknown pretext task: " + s);
}

std::string to_string(PretextTaskKind k) {
  switch (k) {
    case PretextTaskKind::none: return "none";
    case PretextTaskKind::rotation: return "rotation";
    case PretextTaskKind::clip_order: return "clip_order";
    case PretextTaskKind::transform: return "transform";
  }
  return "?";
}

PretextTaskInfo pretext_task_info(PretextTaskKind kind, int order_n_clips) {
  switch (kind) {
    case PretextTaskKind::none: return {kind, 0, 1};
    case PretextTaskKind::rotation: return {kind, 4, 1};
    case PretextTaskKind::clip_order: {
      int f = 1;
      for (int i = 2; i <= order_n_clips; ++i) f *= i;
      return {kind, f, order_n_clips};
    }
    case PretextTaskKind::transform: return {kind, kTransformClasses, 1};
  }
  throw std::logic_error("bad task kind");
}

namespace {

void require_square(const Clip& clip, const char* what) {
  if (clip.height() != clip.width())
    throw std::domain_error(std::string(what) + ": requires square spatial dims, got " +
                            std::to_string(clip.height()) + "x" + std::to_string(clip.width()));
}

}  // namespace

Clip rotate90(const Clip& clip) {
  require_square(clip, "rotate90");
  const int T = clip.frames(), H = clip.height();
  Clip out{Tensor(clip.data.shape()), clip.domain};
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < T; ++t)
      for (int r = 0; r < H; ++r)
        for (int x = 0; x < H; ++x) out.at(c, t, r, x) = clip.at(c, t, x, H - 1 - r);
  return out;
}

Clip rotate180(const Clip& clip) {
  const int T = clip.frames(), H = clip.height(), W = clip.width();
  Clip out{Tensor(clip.data.shape()), clip.domain};
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < T; ++t)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) out.at(c, t, y, x) = clip.at(c, t, H - 1 - y, W - 1 - x);
  return out;
}

Clip temporal_reverse(const Clip& clip) {
  const int T = clip.frames();
  Clip out{Tensor(clip.data.shape()), clip.domain};
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < T; ++t)
      for (int y = 0; y < clip.height(); ++y)
        for (int x = 0; x < clip.width(); ++x) out.at(c, t, y, x) = clip.at(c, T - 1 - t, y, x);
  return out;
}

Clip temporal_adjacent_swap(const Clip& clip) {
  const int T = clip.frames();
  Clip out = clip;
  for (int t = 0; t + 1 < T; t += 2)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < clip.height(); ++y)
        for (int x = 0; x < clip.width(); ++x) {
          out.at(c, t, y, x) = clip.at(c, t + 1, y, x);
          out.at(c, t + 1, y, x) = clip.at(c, t, y, x);
        }
  return out;
}

Clip apply_rotation(const Clip& clip, int label) {
  require_square(clip, "apply_rotation");
  switch (label) {
    case 0: return clip;
    case 1: return rotate90(clip);
    case 2: return rotate180(clip);
    case 3: return rotate90(rotate180(clip));
    default: throw std::out_of_range("apply_rotation: label must be in [0,4)");
  }
}

PretextInstance make_rotation_instance(const Clip& clip, Rng& rng) {
  if (clip.domain != ValueDomain::raw)
    throw std::domain_error("make_rotation_instance: expects a raw clip");
  int label = uniform_int(rng, 0, 3);
  return {{apply_rotation(clip, label)}, label};
}

std::vector<int> plan_order_segments(int video_len, int n_clips, int clip_len, int max_gap,
                                     Rng& rng) {
  if (n_clips < 2) throw std::invalid_argument("plan_order_segments: need >= 2 clips");
  if (video_len < n_clips * clip_len)
    throw std::invalid_argument("plan_order_segments: video too short (" +
                                std::to_string(video_len) + " frames for " +
                                std::to_string(n_clips) + "x" + std::to_string(clip_len) + ")");
  std::vector<int> starts(n_clips);
  for (;;) {
    int pos = 0;
    bool ok = true;
    for (int i = 0; i < n_clips; ++i) {
      int slack = video_len - pos - (n_clips - i) * clip_len;
      if (slack < 0) {
        ok = false;
        break;
      }
      int gap = uniform_int(rng, 0, std::min(max_gap, slack));
      starts[i] = pos + gap;
      pos = starts[i] + clip_len;
    }
    if (ok) return starts;
  }
}

int permutation_to_label(const std::vector<int>& perm) {
  // lexicographic rank via the factorial number system
  const int n = static_cast<int>(perm.size());
  int label = 0, fact = 1;
  for (int i = 2; i <= n; ++i) fact *= i;
  for (int i = 0; i < n; ++i) {
    fact /= (n - i);
    int smaller = 0;
    for (int j = i + 1; j < n; ++j)
      if (perm[j] < perm[i]) ++smaller;
    label += smaller * fact;
  }
  return label;
}

std::vector<int> label_to_permutation(int label, int n) {
  int fact = 1;
  for (int i = 2; i <= n; ++i) fact *= i;
  if (label < 0 || label >= fact) throw std::out_of_range("label_to_permutation: label out of range");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> perm;
  for (int i = 0; i < n; ++i) {
    fact /= (n - i);
    int idx = label / fact;
    label %= fact;
    perm.push_back(pool[idx]);
    pool.erase(pool.begin() + idx);
  }
  return perm;
}

PretextInstance make_order_instance(const std::vector<Clip>& ordered_clips, Rng& rng) {
  const int n = static_cast<int>(ordered_clips.size());
  if (n < 2) throw std::invalid_argument("make_order_instance: need >= 2 clips");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[uniform_int(rng, 0, i)]);
  PretextInstance inst;
  inst.label = permutation_to_label(perm);
  // perm[i] = temporal rank of the clip placed at position i
  for (int i = 0; i < n; ++i) inst.clips.push_back(ordered_clips[perm[i]]);
  return inst;
}

Clip apply_transform(const Clip& clip, int label) {
  switch (label) {
    case 0: return clip;
    case 1: return rotate90(clip);
    case 2: return rotate180(clip);
    case 3: return temporal_reverse(clip);
    case 4: return temporal_adjacent_swap(clip);
    default: throw std::out_of_range("apply_transform: label must be in [0,5)");
  }
}

PretextInstance make_transform_instance(const Clip& clip, Rng& rng) {
  if (clip.domain != ValueDomain::raw)
    throw std::domain_error("make_transform_instance: expects a raw clip");
  require_square(clip, "make_transform_instance");
  int label = uniform_int(rng, 0, kTransformClasses - 1);
  return {{apply_transform(clip, label)}, label};
}

double pretext_loss(const Tensor& logits, const std::vector<int>& labels, Tensor* grad_logits) {
  return cross_entropy(logits, labels, grad_logits);
}

}  // namespace pcl
