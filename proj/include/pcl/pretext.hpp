#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcl/clip.hpp"
#include "pcl/rng.hpp"

namespace pcl {

// One supervised unit: transformed clip(s) plus the transformation label.
struct PretextInstance {
  std::vector<Clip> clips;
  int label = 0;
};

enum class PretextTaskKind { none, rotation, clip_order, transform };

PretextTaskKind pretext_task_from_string(const std::string& s);
std::string to_string(PretextTaskKind k);

struct PretextTaskInfo {
  PretextTaskKind kind;
  int n_classes;  // rotation 4, clip_order n!, transform 5
  int n_clips;    // 1 for single-clip tasks
};

PretextTaskInfo pretext_task_info(PretextTaskKind kind, int order_n_clips = 3);

// --- spatial / temporal primitives (pure, input untouched) ---

// 90-degree rotation convention: out(r, c) = in(c, H-1-r). Square frames only.
Clip rotate90(const Clip& clip);
Clip rotate180(const Clip& clip);
Clip temporal_reverse(const Clip& clip);
// swap frames within consecutive pairs: (0,1)(2,3)...; odd tail stays put
Clip temporal_adjacent_swap(const Clip& clip);

// --- tasks ---

// label = angle index into {0, 90, 180, 270} degrees, same angle every frame
PretextInstance make_rotation_instance(const Clip& clip, Rng& rng);
Clip apply_rotation(const Clip& clip, int label);

// Non-overlapping in-order segment starts with random gaps in [0, max_gap].
std::vector<int> plan_order_segments(int video_len, int n_clips, int clip_len, int max_gap,
                                     Rng& rng);
// Shuffles clips given in temporal order; label = lexicographic index of the
// applied permutation among all n! permutations.
PretextInstance make_order_instance(const std::vector<Clip>& ordered_clips, Rng& rng);
int permutation_to_label(const std::vector<int>& perm);
std::vector<int> label_to_permutation(int label, int n);

// Five-way transformation set: identity, rot90, rot180, temporal-reverse,
// temporal-adjacent-swap
constexpr int kTransformClasses = 5;
PretextInstance make_transform_instance(const Clip& clip, Rng& rng);
Clip apply_transform(const Clip& clip, int label);

// mean cross-entropy over the batch (alias over the shared implementation)
double pretext_loss(const Tensor& logits, const std::vector<int>& labels,
                    Tensor* grad_logits = nullptr);

}  // namespace pcl
