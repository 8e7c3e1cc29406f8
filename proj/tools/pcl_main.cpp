#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcl/config.hpp"
#include "pcl/eval.hpp"
#include "pcl/synthetic.hpp"
#include "pcl/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 1 = runtime failure, 2 = config/validation error, 3 = I/O error
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key " + path + "." + it.key());
}

pcl::SyntheticSpec parse_spec(const json& j) {
  pcl::SyntheticSpec s;
  reject_unknown(j,
                 {"n_classes", "videos_per_class", "frames_per_video", "frame_h", "frame_w",
                  "train_frac", "val_frac", "anchor_speed", "sprite_size_lo", "sprite_size_hi",
                  "sprite_value_lo", "sprite_value_hi", "motion_params"},
                 "$");
  try {
    if (j.contains("n_classes")) s.n_classes = j["n_classes"].get<int>();
    if (j.contains("videos_per_class")) s.videos_per_class = j["videos_per_class"].get<int>();
    if (j.contains("frames_per_video")) s.frames_per_video = j["frames_per_video"].get<int>();
    if (j.contains("frame_h")) s.frame_h = j["frame_h"].get<int>();
    if (j.contains("frame_w")) s.frame_w = j["frame_w"].get<int>();
    if (j.contains("train_frac")) s.train_frac = j["train_frac"].get<double>();
    if (j.contains("val_frac")) s.val_frac = j["val_frac"].get<double>();
    if (j.contains("anchor_speed")) s.anchor_speed = j["anchor_speed"].get<double>();
    if (j.contains("sprite_size_lo")) s.sprite_size_lo = j["sprite_size_lo"].get<double>();
    if (j.contains("sprite_size_hi")) s.sprite_size_hi = j["sprite_size_hi"].get<double>();
    if (j.contains("sprite_value_lo")) s.sprite_value_lo = j["sprite_value_lo"].get<double>();
    if (j.contains("sprite_value_hi")) s.sprite_value_hi = j["sprite_value_hi"].get<double>();
    if (j.contains("motion_params")) {
      for (const auto& m : j["motion_params"]) {
        reject_unknown(m, {"direction", "speed", "shape_pool", "texture_pool"},
                       "$.motion_params[]");
        pcl::MotionParams mp;
        mp.direction = m.at("direction").get<double>();
        mp.speed = m.at("speed").get<double>();
        if (m.contains("shape_pool")) mp.shape_pool = m["shape_pool"].get<std::string>();
        if (m.contains("texture_pool")) mp.texture_pool = m["texture_pool"].get<std::string>();
        s.motion_params.push_back(mp);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return s;
}

struct CommonOpts {
  std::string preset = "desk";
  std::string config_file;
  std::string device = "cpu";
  int workers = 1;
  long long seed = -1;  // -1 = keep config value
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--preset", o.preset, "base preset: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--config", o.config_file, "JSON config overriding the preset");
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--device", o.device, "compute device (cpu only)");
  cmd->add_option("--workers", o.workers, "data-loading workers (single-worker only)");
}

pcl::TrainConfig resolve_config(const CommonOpts& o) {
  if (o.device != "cpu") throw ConfigError("unsupported device '" + o.device + "' (cpu only)");
  if (o.workers != 1)
    throw ConfigError("unsupported worker count " + std::to_string(o.workers) +
                      " (single-worker only; determinism contract)");
  pcl::TrainConfig cfg = pcl::preset_by_name(o.preset);
  try {
    if (!o.config_file.empty()) cfg = pcl::load_train_config(o.config_file, cfg);
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

// train + retrieval for one config; returns the retrieval report
pcl::RetrievalReport run_experiment(const pcl::TrainConfig& cfg, const pcl::Dataset& data,
                                    const fs::path& run_dir) {
  pcl::TrainResult tr = pcl::train(cfg, data, run_dir);

  pcl::Model model = pcl::build_model(cfg);
  pcl::SGD opt;
  pcl::load_checkpoint(tr.best_checkpoint, model, &opt);

  std::vector<std::string> skipped;
  auto gallery = pcl::extract_video_features(model, data, data.train, &skipped);
  auto queries = pcl::extract_video_features(model, data, data.test, &skipped);
  pcl::RetrievalReport rep = pcl::knn_retrieval(queries, gallery, cfg.eval.topk);
  pcl::write_retrieval_report(rep, run_dir);

  auto all = gallery;
  all.insert(all.end(), queries.begin(), queries.end());
  pcl::export_embeddings(all, run_dir / "embeddings.tsv");
  return rep;
}

int cmd_synth(const std::string& spec_file, const std::string& out_dir, long long seed) {
  pcl::SyntheticSpec spec;
  if (!spec_file.empty()) spec = parse_spec(load_json(spec_file));
  auto recs = pcl::generate_synthetic(spec, seed < 0 ? 1 : static_cast<std::uint64_t>(seed),
                                      out_dir);
  std::cout << "wrote " << recs.size() << " videos to " << out_dir << "\n";
  return 0;
}

int cmd_pretrain(const CommonOpts& o, const std::string& data_path, const std::string& out_dir) {
  pcl::TrainConfig cfg = resolve_config(o);
  pcl::Dataset data = pcl::load_dataset(data_path);
  pcl::RetrievalReport rep = run_experiment(cfg, data, out_dir);
  std::cout << "top-1 retrieval " << rep.overall_top1 << " -> " << out_dir << "\n";
  return 0;
}

int cmd_retrieve(const std::string& checkpoint, const std::string& data_path,
                 const std::string& out_dir) {
  pcl::Checkpoint ck = pcl::peek_checkpoint(checkpoint);
  pcl::Model model = pcl::build_model(ck.cfg);
  pcl::load_checkpoint(checkpoint, model, nullptr);
  pcl::Dataset data = pcl::load_dataset(data_path);

  fs::create_directories(out_dir);
  std::vector<std::string> skipped;
  auto gallery = pcl::extract_video_features(model, data, data.train, &skipped);
  auto queries = pcl::extract_video_features(model, data, data.test, &skipped);
  pcl::RetrievalReport rep = pcl::knn_retrieval(queries, gallery, ck.cfg.eval.topk);
  pcl::write_retrieval_report(rep, out_dir);
  auto all = gallery;
  all.insert(all.end(), queries.begin(), queries.end());
  pcl::export_embeddings(all, fs::path(out_dir) / "embeddings.tsv");
  std::cout << "top-1 retrieval " << rep.overall_top1 << " -> " << out_dir << "\n";
  return 0;
}

int cmd_finetune(const std::string& checkpoint, const std::string& data_path,
                 const std::string& config_file, const std::string& out_dir) {
  pcl::Checkpoint ck = pcl::peek_checkpoint(checkpoint);
  pcl::TrainConfig cfg = ck.cfg;
  try {
    if (!config_file.empty()) cfg = pcl::load_train_config(config_file, cfg);
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  pcl::Model model = pcl::build_model(cfg);
  pcl::load_checkpoint(checkpoint, model, nullptr);
  model.cfg = cfg;  // fine-tune settings may differ from the pretrain config
  pcl::Dataset data = pcl::load_dataset(data_path);
  fs::create_directories(out_dir);
  pcl::FinetuneResult res = pcl::finetune_recognize(model, data, out_dir);
  std::cout << "test accuracy " << res.test_accuracy << " -> " << out_dir << "\n";
  return 0;
}

int cmd_ablate(const std::string& matrix_file, const std::string& data_path,
               const std::string& out_dir, bool with_finetune) {
  json m = load_json(matrix_file);
  reject_unknown(m, {"preset", "base", "cells"}, "$");
  std::string preset = m.value("preset", std::string("desk"));
  pcl::TrainConfig base;
  try {
    base = pcl::preset_by_name(preset);
    if (m.contains("base")) base = pcl::parse_train_config(m["base"].dump(), base);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!m.contains("cells") || !m["cells"].is_array() || m["cells"].empty())
    throw ConfigError("$.cells: expected a non-empty array of grid cells");

  pcl::Dataset data = pcl::load_dataset(data_path);
  fs::create_directories(out_dir);
  std::ofstream table(fs::path(out_dir) / "results.tsv");
  table << "cell\ttask\tcontrastive\tresidual\taugment\talpha\ttop1";
  for (int k : base.eval.topk) table << "\ttop" << k;
  if (with_finetune) table << "\trecognition";
  table << "\n";

  std::set<std::string> seen;
  for (const auto& cell : m["cells"]) {
    reject_unknown(cell, {"name", "overrides"}, "$.cells[]");
    std::string name = cell.at("name").get<std::string>();
    if (!seen.insert(name).second) throw ConfigError("duplicate cell name '" + name + "'");
    pcl::TrainConfig cfg;
    try {
      cfg = pcl::parse_train_config(cell.value("overrides", json::object()).dump(), base);
      cfg.validate();
    } catch (const std::exception& e) {
      throw ConfigError("cell '" + name + "': " + e.what());
    }
    fs::path run_dir = fs::path(out_dir) / name;
    std::cout << "[" << name << "] training...\n";
    pcl::RetrievalReport rep = run_experiment(cfg, data, run_dir);
    table << name << '\t' << pcl::to_string(cfg.task) << '\t' << cfg.use_contrastive << '\t'
          << cfg.use_residual << '\t' << cfg.use_augment << '\t' << cfg.alpha << '\t'
          << rep.overall_top1;
    for (int k : cfg.eval.topk) table << '\t' << rep.topk_accuracy.at(k);
    if (with_finetune) {
      pcl::Model model = pcl::build_model(cfg);
      pcl::load_checkpoint(run_dir / "best.ckpt", model, nullptr);
      pcl::FinetuneResult ft = pcl::finetune_recognize(model, data, run_dir);
      table << '\t' << ft.test_accuracy;
    }
    table << "\n";
    table.flush();
  }
  std::cout << "ablation table -> " << (fs::path(out_dir) / "results.tsv") << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream table(fs::path(out_dir) / "comparison.tsv");
  table << "run\ttop1";
  bool header_done = false;
  std::vector<int> ks;
  json summary = json::array();
  for (const auto& dir : run_dirs) {
    fs::path rj = fs::path(dir) / "retrieval.json";
    if (!fs::exists(rj)) throw IoError("no retrieval.json under " + dir);
    json r = load_json(rj);
    if (!header_done) {
      for (auto& [k, v] : r.at("topk").items()) {
        ks.push_back(std::stoi(k));
        table << "\ttop" << k;
      }
      table << "\n";
      header_done = true;
    }
    table << fs::path(dir).filename().string() << '\t'
          << r.at("overall_top1").get<double>();
    for (int k : ks) table << '\t' << r.at("topk").at(std::to_string(k)).get<double>();
    table << "\n";
    json row = {{"run", dir},
                {"overall_top1", r.at("overall_top1")},
                {"topk", r.at("topk")}};
    fs::path ft = fs::path(dir) / "finetune_result.json";
    if (fs::exists(ft)) row["recognition"] = load_json(ft).at("test_accuracy");
    summary.push_back(row);
  }
  std::ofstream js(fs::path(out_dir) / "comparison.json");
  js << summary.dump(2) << "\n";
  std::cout << "comparison table -> " << (fs::path(out_dir) / "comparison.tsv") << "\n";
  std::cout << "plots: python3 tools/plot_embeddings.py <run_dir>/embeddings.tsv --out "
            << out_dir << "/embeddings.png\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised video representation learning: joint pretext + contrastive "
               "training, retrieval and recognition evaluation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the procedural motion corpus");
  std::string spec_file, out_dir, data_path;
  long long synth_seed = 1;
  synth->add_option("--spec", spec_file, "synthetic spec JSON (defaults when omitted)");
  synth->add_option("--out", out_dir, "output dataset directory")->required();
  synth->add_option("--seed", synth_seed, "generation seed");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "self-supervised training + retrieval report");
  CommonOpts pre_opts;
  add_common(pre, pre_opts);
  pre->add_option("--data", data_path, "dataset manifest.tsv")->required();
  pre->add_option("--out", out_dir, "run directory")->required();

  // retrieve
  auto* ret = app.add_subcommand("retrieve", "nearest-neighbour retrieval from a checkpoint");
  std::string checkpoint;
  ret->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  ret->add_option("--data", data_path, "dataset manifest.tsv")->required();
  ret->add_option("--out", out_dir, "output directory")->required();

  // finetune
  auto* ft = app.add_subcommand("finetune", "supervised fine-tuning from a checkpoint");
  std::string ft_config;
  ft->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  ft->add_option("--data", data_path, "dataset manifest.tsv")->required();
  ft->add_option("--config", ft_config, "JSON overriding the checkpoint config");
  ft->add_option("--out", out_dir, "output directory")->required();

  // ablate
  auto* abl = app.add_subcommand("ablate", "run a config grid, one report row per cell");
  std::string matrix_file;
  bool abl_finetune = false;
  abl->add_option("--matrix", matrix_file, "grid definition JSON")->required();
  abl->add_option("--data", data_path, "dataset manifest.tsv")->required();
  abl->add_option("--out", out_dir, "grid output directory")->required();
  abl->add_flag("--finetune", abl_finetune, "also fine-tune and report recognition accuracy");

  // report
  auto* rep = app.add_subcommand("report", "aggregate run directories into one table");
  std::vector<std::string> run_dirs;
  rep->add_option("runs", run_dirs, "run directories with retrieval.json")->required();
  rep->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(spec_file, out_dir, synth_seed);
    if (pre->parsed()) return cmd_pretrain(pre_opts, data_path, out_dir);
    if (ret->parsed()) return cmd_retrieve(checkpoint, data_path, out_dir);
    if (ft->parsed()) return cmd_finetune(checkpoint, data_path, ft_config, out_dir);
    if (abl->parsed()) return cmd_ablate(matrix_file, data_path, out_dir, abl_finetune);
    if (rep->parsed()) return cmd_report(run_dirs, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
