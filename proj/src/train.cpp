#include "pcl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace pcl {

using nlohmann::json;

std::vector<ParamRef> Model::params() {
  std::vector<ParamRef> out;
  if (encoder)
    for (auto& p : encoder->params()) out.push_back(p);
  if (projection)
    for (auto& p : projection->params()) out.push_back(p);
  if (pretext_head)
    for (auto& p : pretext_head->params()) out.push_back(p);
  return out;
}

Model build_model(const TrainConfig& cfg) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  m.encoder = std::make_unique<Encoder>(cfg.encoder, derive_seed(cfg.seed, "encoder_init", 0, 0));
  if (cfg.use_contrastive)
    m.projection = std::make_unique<ProjectionHead>(cfg.encoder.feature_dim, cfg.projection_dim,
                                                    derive_seed(cfg.seed, "projection_init", 0, 0));
  if (cfg.task != PretextTaskKind::none) {
    auto info = cfg.task_info();
    m.pretext_head = std::make_unique<PretextHead>(info.n_clips * cfg.encoder.feature_dim,
                                                   info.n_classes,
                                                   derive_seed(cfg.seed, "head_init", 0, 0));
  }
  return m;
}

void init_bank_for(Model& model, int n_train_videos) {
  if (!model.cfg.use_contrastive || model.cfg.nce.negatives != "bank") return;
  model.bank.emplace(n_train_videos, model.cfg.projection_dim,
                     derive_seed(model.cfg.seed, "bank_init", 0, 0));
}

void SGD::step(const std::vector<ParamRef>& params, double lr, double momentum,
               double weight_decay) {
  if (velocity_.empty())
    for (const auto& p : params) velocity_.emplace_back(p.value->shape());
  if (velocity_.size() != params.size())
    throw std::logic_error("SGD: parameter set changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = velocity_[i];
    Tensor& w = *params[i].value;
    const Tensor& g = *params[i].grad;
    for (std::size_t j = 0; j < w.numel(); ++j) {
      double grad = g[j] + weight_decay * w[j];
      v[j] = momentum * v[j] + grad;
      w[j] -= lr * v[j];
    }
  }
}

namespace {

Clip pipeline_clip(const TrainConfig& cfg, const Video& video, Rng& rng) {
  const int need = cfg.clip_frames + (cfg.use_residual ? 1 : 0);
  if (video.frames < need)
    throw std::runtime_error("video " + video.record.video_id + " too short for clip length");
  int start = uniform_int(rng, 0, video.frames - need);
  Clip clip = sample_clip(video, start, need, cfg.resize_h, cfg.resize_w);
  return augment(clip, cfg.augment, rng());
}

Clip finalize_input(const TrainConfig& cfg, const Clip& clip) {
  return cfg.use_residual ? to_residual(clip) : clip;
}

void copy_clip_into(Tensor& batch, int row, const Clip& clip) {
  std::memcpy(batch.data() + static_cast<std::size_t>(row) * clip.data.numel(), clip.data.data(),
              clip.data.numel() * sizeof(double));
}

}  // namespace

Batch make_batch(const TrainConfig& cfg, const Dataset& data,
                 const std::vector<std::size_t>& items,
                 const std::vector<int>& item_bank_rows, const Model& model, int epoch,
                 std::uint64_t phase_salt) {
  const auto info = cfg.task_info();
  const bool pretext_active = cfg.task != PretextTaskKind::none;
  const bool multi_clip = pretext_active && info.n_clips > 1;
  // multi-clip tasks reuse their own clips as the positive pair; single-clip
  // tasks keep the transformed clip out of the positive pair, otherwise the
  // contrastive loss demands invariance to the very transform the pretext
  // head must predict and the two objectives cancel
  const int n_per_item = multi_clip ? info.n_clips
                        : (cfg.use_contrastive ? (pretext_active ? 3 : 2) : 1);
  const int B = static_cast<int>(items.size());

  Batch batch;
  batch.n_clips_per_item = n_per_item;
  batch.view_rows.resize(B);
  batch.bank_rows = item_bank_rows;
  batch.clips = Tensor({B * n_per_item, 3, cfg.clip_frames, cfg.augment.crop_h, cfg.augment.crop_w});

  for (int i = 0; i < B; ++i) {
    const Video& video = data.videos[items[i]];
    const std::uint64_t base = phase_salt * 64;
    if (multi_clip) {
      Rng plan_rng = make_rng(derive_seed(cfg.seed, video.record.video_id, epoch, base));
      const int need = cfg.clip_frames + (cfg.use_residual ? 1 : 0);
      auto starts = plan_order_segments(video.frames, info.n_clips, need, cfg.order_max_gap, plan_rng);
      std::vector<Clip> ordered;
      for (int k = 0; k < info.n_clips; ++k) {
        Rng rng = make_rng(derive_seed(cfg.seed, video.record.video_id, epoch, base + 1 + k));
        Clip c = sample_clip(video, starts[k], need, cfg.resize_h, cfg.resize_w);
        ordered.push_back(augment(c, cfg.augment, rng()));
      }
      PretextInstance inst = make_order_instance(ordered, plan_rng);
      batch.labels.push_back(inst.label);
      auto perm = label_to_permutation(inst.label, info.n_clips);
      for (int k = 0; k < info.n_clips; ++k) {
        copy_clip_into(batch.clips, i * n_per_item + k, finalize_input(cfg, inst.clips[k]));
        if (perm[k] == 0) batch.view_rows[i][0] = i * n_per_item + k;
        if (perm[k] == 1) batch.view_rows[i][1] = i * n_per_item + k;
      }
    } else {
      for (int k = 0; k < n_per_item; ++k) {
        Rng rng = make_rng(derive_seed(cfg.seed, video.record.video_id, epoch, base + k));
        Clip clip = pipeline_clip(cfg, video, rng);
        if (pretext_active && (k == 0 || cfg.transform_both_views)) {
          PretextInstance inst = cfg.task == PretextTaskKind::rotation
                                     ? make_rotation_instance(clip, rng)
                                     : make_transform_instance(clip, rng);
          clip = inst.clips[0];
          if (k == 0) batch.labels.push_back(inst.label);
        }
        copy_clip_into(batch.clips, i * n_per_item + k, finalize_input(cfg, clip));
      }
      // views are the last two rows; with pretext on those are rows 1 and 2
      batch.view_rows[i] = {i * n_per_item + (n_per_item > 2 ? 1 : 0),
                            i * n_per_item + (n_per_item > 1 ? n_per_item - 1 : 0)};
    }
  }

  if (cfg.use_contrastive && cfg.nce.negatives == "bank") {
    if (!model.bank) throw std::logic_error("make_batch: bank mode without an initialized bank");
    const int k = std::min(cfg.nce.n_negatives, model.bank->size() - 1);
    batch.neg_rows1.resize(B);
    batch.neg_rows2.resize(B);
    for (int i = 0; i < B; ++i) {
      Rng rng = make_rng(derive_seed(cfg.seed, "negatives/" + data.videos[items[i]].record.video_id,
                                     epoch, phase_salt));
      batch.neg_rows1[i] = model.bank->sample_negatives(item_bank_rows[i], k, rng);
      batch.neg_rows2[i] = model.bank->sample_negatives(item_bank_rows[i], k, rng);
    }
  }
  return batch;
}

double total_loss(double pretext_loss_value, double contrast_loss_value, double alpha,
                  bool pretext_active, bool contrast_active) {
  if (!std::isfinite(pretext_loss_value) || !std::isfinite(contrast_loss_value))
    throw std::runtime_error("total_loss: non-finite loss component (pretext=" +
                             std::to_string(pretext_loss_value) + ", contrast=" +
                             std::to_string(contrast_loss_value) + ")");
  if (pretext_active && contrast_active)
    return pretext_loss_value + alpha * contrast_loss_value;
  if (pretext_active) return pretext_loss_value;
  if (contrast_active) return contrast_loss_value;
  throw std::logic_error("total_loss: no active loss");
}

LossParts batch_loss(Model& model, const Batch& batch, bool with_grad,
                     std::vector<std::array<std::vector<double>, 2>>* embeddings_out) {
  const TrainConfig& cfg = model.cfg;
  const bool pretext_active = cfg.task != PretextTaskKind::none;
  const bool contrast_active = cfg.use_contrastive;
  const int B = batch.size();
  const int n = batch.n_clips_per_item;
  const int feat_dim = cfg.encoder.feature_dim;

  Tensor feats = model.encoder->forward(batch.clips);  // [M, feat]
  Tensor grad_feats(feats.shape());

  LossParts parts;

  if (pretext_active) {
    // the head sees only the task clips (rows i*n .. i*n+t-1); for single-clip
    // tasks the second contrastive view is not part of the pretext input
    const int t = cfg.task_info().n_clips;
    Tensor head_in({B, t * feat_dim});
    for (int i = 0; i < B; ++i)
      for (int k = 0; k < t; ++k)
        std::memcpy(head_in.data() + (static_cast<std::size_t>(i) * t + k) * feat_dim,
                    feats.data() + static_cast<std::size_t>(i * n + k) * feat_dim,
                    feat_dim * sizeof(double));
    Tensor logits = model.pretext_head->forward(head_in);
    Tensor grad_logits;
    parts.pretext = cross_entropy(logits, batch.labels, with_grad ? &grad_logits : nullptr);
    if (with_grad) {
      Tensor grad_head_in = model.pretext_head->backward(grad_logits);
      for (int i = 0; i < B; ++i)
        for (int k = 0; k < t; ++k) {
          double* dst = grad_feats.data() + static_cast<std::size_t>(i * n + k) * feat_dim;
          const double* src =
              grad_head_in.data() + (static_cast<std::size_t>(i) * t + k) * feat_dim;
          for (int d = 0; d < feat_dim; ++d) dst[d] += src[d];
        }
    }
  }

  if (contrast_active) {
    Tensor proj_in({2 * B, feat_dim});
    for (int i = 0; i < B; ++i) {
      std::memcpy(proj_in.data() + static_cast<std::size_t>(i) * feat_dim,
                  feats.data() + static_cast<std::size_t>(batch.view_rows[i][0]) * feat_dim,
                  feat_dim * sizeof(double));
      std::memcpy(proj_in.data() + static_cast<std::size_t>(B + i) * feat_dim,
                  feats.data() + static_cast<std::size_t>(batch.view_rows[i][1]) * feat_dim,
                  feat_dim * sizeof(double));
    }
    Tensor z = model.projection->forward(proj_in);  // [2B, D] unit rows
    const int D = cfg.projection_dim;
    Tensor grad_z({2 * B, D});
    const double grad_scale = (pretext_active ? cfg.alpha : 1.0) / B;

    if (embeddings_out) embeddings_out->resize(B);
    for (int i = 0; i < B; ++i) {
      std::vector<double> z1(z.data() + static_cast<std::size_t>(i) * D,
                             z.data() + static_cast<std::size_t>(i + 1) * D);
      std::vector<double> z2(z.data() + static_cast<std::size_t>(B + i) * D,
                             z.data() + static_cast<std::size_t>(B + i + 1) * D);
      Tensor negs1, negs2;
      if (cfg.nce.negatives == "bank") {
        negs1 = model.bank->gather(1, batch.neg_rows1[i]);
        negs2 = model.bank->gather(2, batch.neg_rows2[i]);
      } else {
        // in-batch fallback: the other items' matching-view embeddings
        negs1 = Tensor({B - 1, D});
        negs2 = Tensor({B - 1, D});
        int r = 0;
        for (int j = 0; j < B; ++j) {
          if (j == i) continue;
          std::memcpy(negs1.data() + static_cast<std::size_t>(r) * D,
                      z.data() + static_cast<std::size_t>(j) * D, D * sizeof(double));
          std::memcpy(negs2.data() + static_cast<std::size_t>(r) * D,
                      z.data() + static_cast<std::size_t>(B + j) * D, D * sizeof(double));
          ++r;
        }
      }
      std::vector<double> g1, g2;
      parts.contrast += nce_loss(z1, z2, negs1, negs2, cfg.nce.temperature,
                                 with_grad ? &g1 : nullptr, with_grad ? &g2 : nullptr);
      if (with_grad)
        for (int d = 0; d < D; ++d) {
          grad_z.at2(i, d) += grad_scale * g1[d];
          grad_z.at2(B + i, d) += grad_scale * g2[d];
        }
      if (embeddings_out) (*embeddings_out)[i] = {std::move(z1), std::move(z2)};
    }
    parts.contrast /= B;

    if (with_grad) {
      Tensor grad_proj_in = model.projection->backward(grad_z);
      for (int i = 0; i < B; ++i) {
        for (int v = 0; v < 2; ++v) {
          double* dst =
              grad_feats.data() + static_cast<std::size_t>(batch.view_rows[i][v]) * feat_dim;
          const double* src =
              grad_proj_in.data() + static_cast<std::size_t>(v * B + i) * feat_dim;
          for (int d = 0; d < feat_dim; ++d) dst[d] += src[d];
        }
      }
    }
  }

  parts.total = total_loss(parts.pretext, parts.contrast, cfg.alpha, pretext_active,
                           contrast_active);
  if (with_grad) model.encoder->backward(grad_feats);
  return parts;
}

namespace {

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  double lr = cfg.lr;
  for (double frac : cfg.lr_decay_milestones)
    if (epoch >= static_cast<int>(frac * cfg.epochs)) lr *= cfg.lr_decay_factor;
  return lr;
}

std::vector<std::vector<std::size_t>> chunk_items(std::vector<std::size_t> items, int batch_size,
                                                  bool drop_last) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < items.size(); i += batch_size) {
    std::size_t end = std::min(items.size(), i + batch_size);
    if (drop_last && end - i < static_cast<std::size_t>(batch_size)) break;
    if (end - i < 2) break;  // pair-based losses need at least 2 items
    out.emplace_back(items.begin() + i, items.begin() + end);
  }
  return out;
}

// bank row of each train video; -1 for val/test items
std::map<std::size_t, int> bank_row_map(const Dataset& data) {
  std::map<std::size_t, int> rows;
  for (std::size_t i = 0; i < data.train.size(); ++i) rows[data.train[i]] = static_cast<int>(i);
  return rows;
}

std::vector<int> rows_for(const std::map<std::size_t, int>& map,
                          const std::vector<std::size_t>& items) {
  std::vector<int> out;
  for (auto idx : items) {
    auto it = map.find(idx);
    out.push_back(it == map.end() ? -1 : it->second);
  }
  return out;
}

LossParts eval_split_loss(Model& model, const Dataset& data,
                          const std::vector<std::size_t>& items, int epoch,
                          const std::map<std::size_t, int>& bank_rows) {
  auto batches = chunk_items(items, model.cfg.batch_size, false);
  if (batches.empty()) throw std::invalid_argument("evaluation split too small");
  LossParts acc;
  std::uint64_t salt = 1u << 20;  // distinct from train batch salts
  for (const auto& chunk : batches) {
    Batch b = make_batch(model.cfg, data, chunk, rows_for(bank_rows, chunk), model, epoch, salt++);
    LossParts p = batch_loss(model, b, false);
    acc.pretext += p.pretext;
    acc.contrast += p.contrast;
    acc.total += p.total;
  }
  acc.pretext /= batches.size();
  acc.contrast /= batches.size();
  acc.total /= batches.size();
  return acc;
}

}  // namespace

double validation_metric(Model& model, const Dataset& data, int epoch) {
  if (data.val.empty()) throw std::invalid_argument("validation split is empty");
  auto rows = bank_row_map(data);
  return -eval_split_loss(model, data, data.val, epoch, rows).total;
}

TrainResult train(const TrainConfig& cfg, const Dataset& data,
                  const std::filesystem::path& run_dir) {
  cfg.validate();
  if (data.train.empty()) throw std::invalid_argument("train split is empty");
  if (data.val.empty()) throw std::invalid_argument("validation split is empty");

  std::filesystem::create_directories(run_dir);
  {
    std::ofstream cfg_out(run_dir / "config.json");
    cfg_out << train_config_to_json(cfg) << '\n';
  }
  std::ofstream metrics(run_dir / "metrics.jsonl", std::ios::app);
  std::ofstream timing(run_dir / "timing.log", std::ios::app);

  Model model = build_model(cfg);
  init_bank_for(model, static_cast<int>(data.train.size()));
  SGD opt;
  auto bank_rows = bank_row_map(data);

  TrainResult result;
  result.best_checkpoint = run_dir / "best.ckpt";
  result.last_checkpoint = run_dir / "last.ckpt";
  result.best_val_metric = -std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double lr = lr_at_epoch(cfg, epoch);

    std::vector<std::size_t> order = data.train;
    {
      Rng shuffle_rng = make_rng(derive_seed(cfg.seed, "epoch_order", epoch, 0));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[uniform_int(shuffle_rng, 0, static_cast<int>(i) - 1)]);
    }
    auto batches = chunk_items(order, cfg.batch_size, true);

    LossParts epoch_acc;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      Batch batch = make_batch(cfg, data, batches[bi], rows_for(bank_rows, batches[bi]), model,
                               epoch, bi);
      auto params = model.params();
      zero_grads(params);
      std::vector<std::array<std::vector<double>, 2>> embeddings;
      LossParts parts = batch_loss(model, batch, true, &embeddings);
      if (!std::isfinite(parts.total) || parts.total > 1e4)
        throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(bi) + " (loss=" +
                                 std::to_string(parts.total) + ")");
      opt.step(params, lr, cfg.sgd_momentum, cfg.weight_decay);
      if (model.bank)
        for (int i = 0; i < batch.size(); ++i)
          if (batch.bank_rows[i] >= 0) {
            model.bank->update(batch.bank_rows[i], 1, embeddings[i][0], cfg.nce.momentum);
            model.bank->update(batch.bank_rows[i], 2, embeddings[i][1], cfg.nce.momentum);
          }
      epoch_acc.pretext += parts.pretext;
      epoch_acc.contrast += parts.contrast;
      epoch_acc.total += parts.total;
    }
    const double nb = static_cast<double>(batches.size());

    EpochMetrics em;
    em.epoch = epoch;
    em.train_pretext = epoch_acc.pretext / nb;
    em.train_contrast = epoch_acc.contrast / nb;
    em.train_total = epoch_acc.total / nb;
    em.lr = lr;
    em.val_metric = validation_metric(model, data, epoch);
    result.history.push_back(em);

    // checkpoints record the number of completed epochs
    if (em.val_metric > result.best_val_metric) {
      result.best_val_metric = em.val_metric;
      save_checkpoint(result.best_checkpoint, model, opt, epoch + 1, result.best_val_metric);
    }
    save_checkpoint(result.last_checkpoint, model, opt, epoch + 1, result.best_val_metric);

    json line = {{"epoch", em.epoch},
                 {"train_pretext", em.train_pretext},
                 {"train_contrast", em.train_contrast},
                 {"train_total", em.train_total},
                 {"val_metric", em.val_metric},
                 {"lr", em.lr}};
    metrics << line.dump() << '\n';
    metrics.flush();
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timing << "epoch " << epoch << " wall_s " << dt << '\n';
    timing.flush();
  }
  return result;
}

// --- checkpoint container: "PCLK" | u32 version | u64 json len | json |
//     u32 tensor count | per tensor: name, rank, dims, f64 payload ---

namespace {

constexpr char kCkptMagic[4] = {'P', 'C', 'L', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

void write_tensor_entry(std::ofstream& os, const std::string& name, const Tensor& t) {
  std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
  os.write(reinterpret_cast<const char*>(&name_len), 4);
  os.write(name.data(), name_len);
  std::uint8_t rank = static_cast<std::uint8_t>(t.rank());
  os.write(reinterpret_cast<const char*>(&rank), 1);
  for (int d : t.shape()) {
    std::int32_t dd = d;
    os.write(reinterpret_cast<const char*>(&dd), 4);
  }
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

std::pair<std::string, Tensor> read_tensor_entry(std::ifstream& is) {
  std::uint32_t name_len;
  is.read(reinterpret_cast<char*>(&name_len), 4);
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  std::uint8_t rank;
  is.read(reinterpret_cast<char*>(&rank), 1);
  std::vector<int> dims(rank);
  for (int i = 0; i < rank; ++i) {
    std::int32_t d;
    is.read(reinterpret_cast<char*>(&d), 4);
    dims[i] = d;
  }
  Tensor t(dims);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated checkpoint");
  return {name, std::move(t)};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Model& model, SGD& opt, int epoch,
                     double best_val_metric) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path.string());
  os.write(kCkptMagic, 4);
  os.write(reinterpret_cast<const char*>(&kCkptVersion), 4);
  json header = {{"config", json::parse(train_config_to_json(model.cfg))},
                 {"epoch", epoch},
                 {"best_val_metric", best_val_metric}};
  std::string htxt = header.dump();
  std::uint64_t hlen = htxt.size();
  os.write(reinterpret_cast<const char*>(&hlen), 8);
  os.write(htxt.data(), static_cast<std::streamsize>(hlen));

  auto params = model.params();
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (const auto& p : params) tensors.emplace_back(p.name, p.value);
  for (std::size_t i = 0; i < opt.velocities().size(); ++i)
    tensors.emplace_back("opt.vel." + std::to_string(i), &opt.velocities()[i]);
  if (model.bank) {
    tensors.emplace_back("bank.view1", &model.bank->view(1));
    tensors.emplace_back("bank.view2", &model.bank->view(2));
  }
  std::uint32_t count = static_cast<std::uint32_t>(tensors.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  for (auto& [name, t] : tensors) write_tensor_entry(os, name, *t);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path.string());
}

namespace {

Checkpoint read_header(std::ifstream& is, const std::filesystem::path& path) {
  char magic[4];
  is.read(magic, 4);
  std::uint32_t version;
  is.read(reinterpret_cast<char*>(&version), 4);
  if (!is || std::memcmp(magic, kCkptMagic, 4) != 0 || version != kCkptVersion)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  std::uint64_t hlen;
  is.read(reinterpret_cast<char*>(&hlen), 8);
  std::string htxt(hlen, '\0');
  is.read(htxt.data(), static_cast<std::streamsize>(hlen));
  json header = json::parse(htxt);
  Checkpoint ck;
  ck.cfg = parse_train_config(header.at("config").dump(), TrainConfig{});
  ck.epoch = header.at("epoch").get<int>();
  ck.best_val_metric = header.at("best_val_metric").get<double>();
  return ck;
}

}  // namespace

Checkpoint peek_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  return read_header(is, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, Model& model, SGD* opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  Checkpoint ck = read_header(is, path);
  std::uint32_t count;
  is.read(reinterpret_cast<char*>(&count), 4);

  auto params = model.params();
  std::map<std::string, Tensor*> by_name;
  for (auto& p : params) by_name[p.name] = p.value;

  std::vector<std::pair<int, Tensor>> velocities;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = read_tensor_entry(is);
    if (name.rfind("opt.vel.", 0) == 0) {
      velocities.emplace_back(std::stoi(name.substr(8)), std::move(t));
    } else if (name == "bank.view1" || name == "bank.view2") {
      if (!model.bank)
        model.bank.emplace(t.dim(0), t.dim(1), derive_seed(ck.cfg.seed, "bank_init", 0, 0));
      model.bank->mutable_view(name == "bank.view1" ? 1 : 2) = std::move(t);
    } else {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw std::runtime_error("checkpoint tensor has no home: " + name);
      if (!it->second->same_shape(t))
        throw std::runtime_error("checkpoint tensor shape mismatch: " + name);
      *it->second = std::move(t);
    }
  }
  if (opt) {
    std::sort(velocities.begin(), velocities.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    opt->velocities().clear();
    for (auto& [idx, t] : velocities) opt->velocities().push_back(std::move(t));
  }
  return ck;
}

}  // namespace pcl
