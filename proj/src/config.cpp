#include "pcl/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace pcl {

using nlohmann::json;

namespace {

// Tracks consumed keys so unknown keys fail with their full path.
class Scope {
 public:
  Scope(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument(path_ + ": expected object");
  }

  bool has(const char* key) {
    used_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(path_ + "." + key + ": wrong type");
    }
  }

  void get_str(const char* key, std::string& out) { get<std::string>(key, out); }

  json sub(const char* key) {
    used_.insert(key);
    return j_.value(key, json::object());
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key()))
        throw std::invalid_argument("unknown config key " + path_ + "." + it.key());
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void apply_augment(const json& j, AugmentConfig& a, const std::string& path) {
  Scope s(j, path);
  s.get("crop_h", a.crop_h);
  s.get("crop_w", a.crop_w);
  s.get("brightness", a.brightness);
  s.get("contrast", a.contrast);
  s.get("saturation", a.saturation);
  s.get("hue", a.hue);
  s.get("grayscale_prob", a.grayscale_prob);
  s.get("blur_prob", a.blur_prob);
  s.get("blur_sigma_lo", a.blur_sigma_lo);
  s.get("blur_sigma_hi", a.blur_sigma_hi);
  s.get("flip_prob", a.flip_prob);
  s.get("enabled", a.enabled);
  s.finish();
}

void apply_encoder(const json& j, EncoderConfig& e, const std::string& path) {
  Scope s(j, path);
  std::string family = to_string(e.family);
  s.get_str("family", family);
  e.family = encoder_family_from_string(family);
  s.get("width_multiplier", e.width_multiplier);
  s.get("feature_dim", e.feature_dim);
  s.finish();
}

void apply_nce(const json& j, NCEConfig& n, const std::string& path) {
  Scope s(j, path);
  s.get("temperature", n.temperature);
  s.get("n_negatives", n.n_negatives);
  s.get("momentum", n.momentum);
  s.get_str("negatives", n.negatives);
  s.finish();
}

void apply_eval(const json& j, EvalConfig& e, const std::string& path) {
  Scope s(j, path);
  s.get("clips_per_video", e.clips_per_video);
  s.get("use_projected", e.use_projected);
  s.get("topk", e.topk);
  s.finish();
}

void apply_finetune(const json& j, FinetuneConfig& f, const std::string& path) {
  Scope s(j, path);
  s.get("epochs", f.epochs);
  s.get("lr", f.lr);
  s.get("sgd_momentum", f.sgd_momentum);
  s.get("linear_probe", f.linear_probe);
  s.get("batch_size", f.batch_size);
  s.finish();
}

void resolve(TrainConfig& c) {
  // encoder input geometry follows the data pipeline
  c.encoder.in_frames = c.clip_frames;
  c.encoder.in_h = c.augment.crop_h;
  c.encoder.in_w = c.augment.crop_w;
  c.augment.enabled = c.use_augment;
}

}  // namespace

void TrainConfig::validate() const {
  if (schema_version != 1) throw std::invalid_argument("$.schema_version: unsupported version");
  if (task == PretextTaskKind::none && !use_contrastive)
    throw std::invalid_argument("$.task/$.use_contrastive: at least one objective must be active");
  if (alpha < 0) throw std::invalid_argument("$.alpha: must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("$.batch_size: must be >= 2");
  if (epochs < 1) throw std::invalid_argument("$.epochs: must be >= 1");
  if (lr <= 0) throw std::invalid_argument("$.lr: must be > 0");
  if (sgd_momentum < 0 || sgd_momentum >= 1)
    throw std::invalid_argument("$.sgd_momentum: must be in [0,1)");
  if (weight_decay < 0) throw std::invalid_argument("$.weight_decay: must be >= 0");
  if (lr_decay_factor <= 0 || lr_decay_factor > 1)
    throw std::invalid_argument("$.lr_decay_factor: must be in (0,1]");
  for (std::size_t i = 0; i < lr_decay_milestones.size(); ++i) {
    double m = lr_decay_milestones[i];
    if (m <= 0 || m >= 1)
      throw std::invalid_argument("$.lr_decay_milestones: fractions in (0,1)");
    if (i && m <= lr_decay_milestones[i - 1])
      throw std::invalid_argument("$.lr_decay_milestones: must be strictly increasing");
  }
  if (clip_frames < 2) throw std::invalid_argument("$.clip_frames: must be >= 2");
  if (order_n_clips < 2 || order_n_clips > 5)
    throw std::invalid_argument("$.order_n_clips: must be in [2,5]");
  if (order_max_gap < 0) throw std::invalid_argument("$.order_max_gap: must be >= 0");
  if (projection_dim < 1) throw std::invalid_argument("$.projection_dim: must be >= 1");
  try {
    encoder.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("$.encoder.") + e.what());
  }
  try {
    nce.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("$.nce.") + e.what());
  }
  if (eval.clips_per_video < 1) throw std::invalid_argument("$.eval.clips_per_video: must be >= 1");
  for (int k : eval.topk)
    if (k < 1) throw std::invalid_argument("$.eval.topk: entries must be >= 1");
  if (finetune.epochs < 1) throw std::invalid_argument("$.finetune.epochs: must be >= 1");
  if (finetune.lr <= 0) throw std::invalid_argument("$.finetune.lr: must be > 0");
}

TrainConfig desk_preset() {
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 16;
  c.lr = 0.01;
  c.clip_frames = 8;
  c.encoder.family = EncoderFamily::r3d_like;
  c.encoder.width_multiplier = 1.0;
  c.encoder.feature_dim = 64;
  c.projection_dim = 128;
  c.nce.n_negatives = 1024;  // clamped to N-1 at runtime
  // the contrastive term carries an implicit 1/temperature gradient scale, so
  // at this corpus size a full-weight contrastive branch drowns the pretext
  // branch in the shared encoder; a small alpha keeps both objectives learning
  c.alpha = 0.2;
  // constant lr: on the small corpus the decay step stalls the contrastive
  // branch into a collapsed fixed point instead of refining it
  c.lr_decay_milestones.clear();
  c.augment.crop_h = 24;
  c.augment.crop_w = 24;
  // synthetic classes are motion directions; flips would alias mirrored pairs
  c.augment.flip_prob = 0.0;
  c.eval.clips_per_video = 8;
  resolve(c);
  return c;
}

TrainConfig paper_preset() {
  TrainConfig c;
  c.epochs = 200;
  c.batch_size = 16;
  c.lr = 0.01;
  c.clip_frames = 16;
  c.resize_h = 128;
  c.resize_w = 171;
  c.encoder.family = EncoderFamily::r3d_like;
  c.encoder.width_multiplier = 1.0;
  c.encoder.feature_dim = 512;
  c.projection_dim = 128;
  c.augment.crop_h = 112;
  c.augment.crop_w = 112;
  c.augment.flip_prob = 0.5;
  c.eval.clips_per_video = 10;
  c.finetune.epochs = 150;
  c.finetune.lr = 0.001;
  resolve(c);
  return c;
}

TrainConfig preset_by_name(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw std::invalid_argument("unknown preset: " + name);
}

TrainConfig parse_train_config(const std::string& json_text, const TrainConfig& base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  TrainConfig c = base;
  Scope s(j, "$");
  s.get("schema_version", c.schema_version);
  s.get("seed", c.seed);
  if (s.has("task")) {
    std::string task;
    s.get_str("task", task);
    c.task = pretext_task_from_string(task);
  }
  s.get("use_contrastive", c.use_contrastive);
  s.get("use_residual", c.use_residual);
  s.get("use_augment", c.use_augment);
  s.get("alpha", c.alpha);
  s.get("transform_both_views", c.transform_both_views);
  s.get("batch_size", c.batch_size);
  s.get("epochs", c.epochs);
  s.get("lr", c.lr);
  s.get("sgd_momentum", c.sgd_momentum);
  s.get("weight_decay", c.weight_decay);
  s.get("lr_decay_milestones", c.lr_decay_milestones);
  s.get("lr_decay_factor", c.lr_decay_factor);
  s.get("clip_frames", c.clip_frames);
  s.get("resize_h", c.resize_h);
  s.get("resize_w", c.resize_w);
  s.get("order_n_clips", c.order_n_clips);
  s.get("order_max_gap", c.order_max_gap);
  s.get("projection_dim", c.projection_dim);
  if (s.has("encoder")) apply_encoder(j.at("encoder"), c.encoder, "$.encoder");
  if (s.has("nce")) apply_nce(j.at("nce"), c.nce, "$.nce");
  if (s.has("augment")) apply_augment(j.at("augment"), c.augment, "$.augment");
  if (s.has("eval")) apply_eval(j.at("eval"), c.eval, "$.eval");
  if (s.has("finetune")) apply_finetune(j.at("finetune"), c.finetune, "$.finetune");
  s.finish();
  resolve(c);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& file, const TrainConfig& base) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open config: " + file.string());
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_train_config(text, base);
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["task"] = to_string(c.task);
  j["use_contrastive"] = c.use_contrastive;
  j["use_residual"] = c.use_residual;
  j["use_augment"] = c.use_augment;
  j["alpha"] = c.alpha;
  j["transform_both_views"] = c.transform_both_views;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["sgd_momentum"] = c.sgd_momentum;
  j["weight_decay"] = c.weight_decay;
  j["lr_decay_milestones"] = c.lr_decay_milestones;
  j["lr_decay_factor"] = c.lr_decay_factor;
  j["clip_frames"] = c.clip_frames;
  j["resize_h"] = c.resize_h;
  j["resize_w"] = c.resize_w;
  j["order_n_clips"] = c.order_n_clips;
  j["order_max_gap"] = c.order_max_gap;
  j["projection_dim"] = c.projection_dim;
  j["encoder"] = {{"family", to_string(c.encoder.family)},
                  {"width_multiplier", c.encoder.width_multiplier},
                  {"feature_dim", c.encoder.feature_dim}};
  j["nce"] = {{"temperature", c.nce.temperature},
              {"n_negatives", c.nce.n_negatives},
              {"momentum", c.nce.momentum},
              {"negatives", c.nce.negatives}};
  j["augment"] = {{"crop_h", c.augment.crop_h},
                  {"crop_w", c.augment.crop_w},
                  {"brightness", c.augment.brightness},
                  {"contrast", c.augment.contrast},
                  {"saturation", c.augment.saturation},
                  {"hue", c.augment.hue},
                  {"grayscale_prob", c.augment.grayscale_prob},
                  {"blur_prob", c.augment.blur_prob},
                  {"blur_sigma_lo", c.augment.blur_sigma_lo},
                  {"blur_sigma_hi", c.augment.blur_sigma_hi},
                  {"flip_prob", c.augment.flip_prob},
                  {"enabled", c.augment.enabled}};
  j["eval"] = {{"clips_per_video", c.eval.clips_per_video},
               {"use_projected", c.eval.use_projected},
               {"topk", c.eval.topk}};
  j["finetune"] = {{"epochs", c.finetune.epochs},
                   {"lr", c.finetune.lr},
                   {"sgd_momentum", c.finetune.sgd_momentum},
                   {"linear_probe", c.finetune.linear_probe},
                   {"batch_size", c.finetune.batch_size}};
  return j.dump(2);
}

}  // namespace pcl
