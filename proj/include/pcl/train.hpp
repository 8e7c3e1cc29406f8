#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "pcl/config.hpp"
#include "pcl/contrastive.hpp"
#include "pcl/encoder.hpp"
#include "pcl/heads.hpp"
#include "pcl/synthetic.hpp"

namespace pcl {

// Encoder + heads + (optionally) the negative bank, owned together.
struct Model {
  TrainConfig cfg;
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<ProjectionHead> projection;   // present iff use_contrastive
  std::unique_ptr<PretextHead> pretext_head;    // present iff task != none
  std::optional<EmbeddingBank> bank;            // sized over the train split

  std::vector<ParamRef> params();
};

Model build_model(const TrainConfig& cfg);
void init_bank_for(Model& model, int n_train_videos);

class SGD {
 public:
  void step(const std::vector<ParamRef>& params, double lr, double momentum,
            double weight_decay);
  std::vector<Tensor>& velocities() { return velocity_; }

 private:
  std::vector<Tensor> velocity_;
};

// One assembled mini-batch: every clip of every item stacked into a single
// encoder batch so a single forward/backward covers pretext and both
// contrastive views.
struct Batch {
  Tensor clips;                                // [M, 3, T, H, W]
  int n_clips_per_item = 1;                    // M = B * n_clips_per_item
  std::vector<int> labels;                     // pretext labels, size B (if task)
  std::vector<std::array<int, 2>> view_rows;   // per item, rows of the two views
  std::vector<int> bank_rows;                  // train-bank row per item, -1 = none
  std::vector<std::vector<int>> neg_rows1, neg_rows2;  // bank negatives (bank mode)

  int size() const { return static_cast<int>(view_rows.size()); }
};

// Deterministic batch assembly; every random choice is a pure function of
// (cfg.seed, video_id, epoch, clip_index).
Batch make_batch(const TrainConfig& cfg, const Dataset& data,
                 const std::vector<std::size_t>& items,
                 const std::vector<int>& item_bank_rows, const Model& model, int epoch,
                 std::uint64_t phase_salt);

struct LossParts {
  double pretext = 0.0;
  double contrast = 0.0;
  double total = 0.0;
};

// L_total = L_pretext + alpha * L_contrast (components dropped when their
// branch is disabled). with_grad accumulates parameter gradients.
// Optionally returns the per-item view embeddings for bank updates.
LossParts batch_loss(Model& model, const Batch& batch, bool with_grad,
                     std::vector<std::array<std::vector<double>, 2>>* embeddings_out = nullptr);

double total_loss(double pretext_loss_value, double contrast_loss_value, double alpha,
                  bool pretext_active, bool contrast_active);

struct EpochMetrics {
  int epoch = 0;
  double train_pretext = 0, train_contrast = 0, train_total = 0;
  double val_metric = 0;  // negated validation total loss (best = max)
  double lr = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  std::filesystem::path best_checkpoint, last_checkpoint;
  double best_val_metric = 0;
};

// Full self-supervised run: epochs of SGD, per-epoch validation, best-model
// checkpointing, append-only metrics log under run_dir.
TrainResult train(const TrainConfig& cfg, const Dataset& data,
                  const std::filesystem::path& run_dir);

double validation_metric(Model& model, const Dataset& data, int epoch);

// --- checkpoints ---

struct Checkpoint {
  TrainConfig cfg;
  int epoch = 0;
  double best_val_metric = 0;
};

void save_checkpoint(const std::filesystem::path& path, Model& model, SGD& opt, int epoch,
                     double best_val_metric);
Checkpoint load_checkpoint(const std::filesystem::path& path, Model& model, SGD* opt);
// reads only the header; model is built by the caller afterwards
Checkpoint peek_checkpoint(const std::filesystem::path& path);

}  // namespace pcl
