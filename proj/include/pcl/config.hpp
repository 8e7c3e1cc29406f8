#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcl/augment.hpp"
#include "pcl/contrastive.hpp"
#include "pcl/encoder.hpp"
#include "pcl/pretext.hpp"

namespace pcl {

struct EvalConfig {
  int clips_per_video = 10;
  bool use_projected = false;  // retrieval features default to encoder output
  std::vector<int> topk = {1, 5, 10, 20, 50};
};

struct FinetuneConfig {
  int epochs = 20;
  double lr = 0.001;
  double sgd_momentum = 0.9;
  bool linear_probe = false;
  int batch_size = 16;
};

// Full experiment description; every ablation cell is one config.
struct TrainConfig {
  int schema_version = 1;
  std::uint64_t seed = 1;

  PretextTaskKind task = PretextTaskKind::transform;
  bool use_contrastive = true;
  bool use_residual = true;
  bool use_augment = true;
  double alpha = 0.5;
  bool transform_both_views = false;  // single-clip tasks transform only view 1 by default

  int batch_size = 16;
  int epochs = 30;
  double lr = 0.01;
  double sgd_momentum = 0.9;
  double weight_decay = 0.0;
  std::vector<double> lr_decay_milestones = {0.6, 0.8};  // fractions of total epochs
  double lr_decay_factor = 0.1;

  int clip_frames = 8;
  int resize_h = 0, resize_w = 0;  // 0 = no resize before crop
  int order_n_clips = 3;
  int order_max_gap = 8;

  EncoderConfig encoder;
  int projection_dim = 128;
  NCEConfig nce;
  AugmentConfig augment;
  EvalConfig eval;
  FinetuneConfig finetune;

  void validate() const;  // throws with field path on violations
  PretextTaskInfo task_info() const { return pretext_task_info(task, order_n_clips); }
};

// Desk preset: tiny encoder + short schedule over the synthetic corpus.
TrainConfig desk_preset();
// Paper preset: full-scale settings (16x112x112 input, 200 epochs).
TrainConfig paper_preset();
TrainConfig preset_by_name(const std::string& name);

// Strict JSON round-trip: unknown keys and type mismatches are errors that
// name the offending field path.
TrainConfig load_train_config(const std::filesystem::path& file, const TrainConfig& base);
TrainConfig parse_train_config(const std::string& json_text, const TrainConfig& base);
std::string train_config_to_json(const TrainConfig& cfg);

}  // namespace pcl
