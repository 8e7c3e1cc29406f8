#include "pcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace pcl {

using nlohmann::json;

namespace {

Clip eval_clip(const TrainConfig& cfg, const Video& video, int start) {
  const int need = cfg.clip_frames + (cfg.use_residual ? 1 : 0);
  Clip clip = sample_clip(video, start, need, cfg.resize_h, cfg.resize_w);
  clip = center_crop(clip, cfg.augment.crop_h, cfg.augment.crop_w);
  return cfg.use_residual ? to_residual(clip) : clip;
}

std::vector<int> eval_starts(int video_frames, int need, int clips_per_video) {
  std::vector<int> starts;
  const int span = video_frames - need;
  if (clips_per_video == 1) {
    starts.push_back(span / 2);
  } else {
    for (int i = 0; i < clips_per_video; ++i)
      starts.push_back(static_cast<int>(std::lround(
          static_cast<double>(i) * span / (clips_per_video - 1))));
  }
  return starts;
}

}  // namespace

std::vector<VideoFeature> extract_video_features(Model& model, const Dataset& data,
                                                 const std::vector<std::size_t>& items,
                                                 std::vector<std::string>* skipped) {
  const TrainConfig& cfg = model.cfg;
  const int need = cfg.clip_frames + (cfg.use_residual ? 1 : 0);
  const int out_dim = cfg.eval.use_projected ? cfg.projection_dim : cfg.encoder.feature_dim;
  if (cfg.eval.use_projected && !model.projection)
    throw std::invalid_argument("projected features requested but model has no projection head");

  std::vector<VideoFeature> out;
  for (auto idx : items) {
    const Video& video = data.videos[idx];
    if (video.frames < need) {
      std::cerr << "warning: skipping " << video.record.video_id << " (too short for "
                << need << "-frame clips)\n";
      if (skipped) skipped->push_back(video.record.video_id);
      continue;
    }
    auto starts = eval_starts(video.frames, need, cfg.eval.clips_per_video);
    const int n = static_cast<int>(starts.size());
    Tensor batch({n, 3, cfg.clip_frames, cfg.augment.crop_h, cfg.augment.crop_w});
    for (int i = 0; i < n; ++i) {
      Clip c = eval_clip(cfg, video, starts[i]);
      std::memcpy(batch.data() + static_cast<std::size_t>(i) * c.data.numel(), c.data.data(),
                  c.data.numel() * sizeof(double));
    }
    Tensor feats = model.encoder->forward(batch);
    if (cfg.eval.use_projected) feats = model.projection->forward(feats);

    VideoFeature vf;
    vf.video_id = video.record.video_id;
    vf.label = video.record.label.value_or(-1);
    vf.vector.assign(out_dim, 0.0);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < out_dim; ++d) vf.vector[d] += feats.at2(i, d);
    for (double& v : vf.vector) v /= n;
    out.push_back(std::move(vf));
  }
  return out;
}

RetrievalReport knn_retrieval(const std::vector<VideoFeature>& queries,
                              const std::vector<VideoFeature>& gallery,
                              const std::vector<int>& ks) {
  if (gallery.empty()) throw std::invalid_argument("knn_retrieval: empty gallery");
  const int dim = static_cast<int>(gallery[0].vector.size());
  for (const auto& f : gallery)
    if (static_cast<int>(f.vector.size()) != dim)
      throw std::invalid_argument("knn_retrieval: inconsistent feature dims");
  for (const auto& f : queries)
    if (static_cast<int>(f.vector.size()) != dim)
      throw std::invalid_argument("knn_retrieval: inconsistent feature dims");

  auto unit = [dim](const std::vector<double>& v) {
    double n2 = 0;
    for (double x : v) n2 += x * x;
    double inv = 1.0 / std::max(std::sqrt(n2), 1e-12);
    std::vector<double> u(v);
    for (double& x : u) x *= inv;
    return u;
  };
  std::vector<std::vector<double>> g_unit;
  g_unit.reserve(gallery.size());
  for (const auto& g : gallery) g_unit.push_back(unit(g.vector));

  std::vector<int> ks_eff;
  for (int k : ks) {
    if (k > static_cast<int>(gallery.size())) {
      std::cerr << "warning: k=" << k << " clamped to gallery size " << gallery.size() << "\n";
      k = static_cast<int>(gallery.size());
    }
    ks_eff.push_back(k);
  }
  const int kmax = *std::max_element(ks_eff.begin(), ks_eff.end());

  RetrievalReport report;
  std::vector<int> hit_counts(ks_eff.size(), 0);  // indexed like ks (clamps may collide)
  std::map<int, int> class_top1_hits;
  std::map<std::pair<int, int>, int> confusion_counts;

  for (const auto& q : queries) {
    auto qu = unit(q.vector);
    std::vector<std::pair<double, int>> scored;  // (sim, gallery idx)
    scored.reserve(gallery.size());
    for (std::size_t gi = 0; gi < gallery.size(); ++gi) {
      double s = 0;
      for (int d = 0; d < dim; ++d) s += qu[d] * g_unit[gi][d];
      scored.emplace_back(s, static_cast<int>(gi));
    }
    std::partial_sort(scored.begin(), scored.begin() + kmax, scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;  // tie: lower gallery index first
                      });
    int first_hit_rank = -1;
    for (int r = 0; r < kmax; ++r)
      if (gallery[scored[r].second].label == q.label) {
        first_hit_rank = r;
        break;
      }
    for (std::size_t i = 0; i < ks_eff.size(); ++i)
      if (first_hit_rank >= 0 && first_hit_rank < ks_eff[i]) ++hit_counts[i];
    report.class_sizes[q.label] += 1;
    int predicted = gallery[scored[0].second].label;
    if (predicted == q.label)
      ++class_top1_hits[q.label];
    else
      ++confusion_counts[{q.label, predicted}];
  }

  const double nq = static_cast<double>(queries.size());
  for (std::size_t i = 0; i < ks.size(); ++i)
    report.topk_accuracy[ks[i]] = queries.empty() ? 0.0 : hit_counts[i] / nq;
  int total_hits = 0;
  for (auto& [cls, size] : report.class_sizes) {
    report.per_class_top1[cls] = static_cast<double>(class_top1_hits[cls]) / size;
    total_hits += class_top1_hits[cls];
  }
  report.overall_top1 = queries.empty() ? 0.0 : total_hits / nq;
  for (auto& [pair, count] : confusion_counts) report.confusions.emplace_back(pair, count);
  std::sort(report.confusions.begin(), report.confusions.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return report;
}

void write_retrieval_report(const RetrievalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "retrieval.tsv");
    os << "k\taccuracy\n";
    for (auto& [k, acc] : report.topk_accuracy) os << k << '\t' << acc << '\n';
    os << "\nclass\ttop1\tqueries\n";
    for (auto& [cls, acc] : report.per_class_top1)
      os << cls << '\t' << acc << '\t' << report.class_sizes.at(cls) << '\n';
    os << "\ntrue\tpredicted\tcount\n";
    for (auto& [pair, count] : report.confusions)
      os << pair.first << '\t' << pair.second << '\t' << count << '\n';
  }
  json j;
  for (auto& [k, acc] : report.topk_accuracy) j["topk"][std::to_string(k)] = acc;
  for (auto& [cls, acc] : report.per_class_top1) j["per_class_top1"][std::to_string(cls)] = acc;
  j["overall_top1"] = report.overall_top1;
  std::ofstream(out_dir / "retrieval.json") << j.dump(2) << '\n';
}

namespace {

std::vector<Tensor> snapshot_params(const std::vector<ParamRef>& params) {
  std::vector<Tensor> out;
  for (const auto& p : params) out.push_back(*p.value);
  return out;
}

void restore_params(const std::vector<ParamRef>& params, const std::vector<Tensor>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = snap[i];
}

double split_accuracy(Model& model, Linear& head, const Dataset& data,
                      const std::vector<std::size_t>& items) {
  const TrainConfig& cfg = model.cfg;
  int correct = 0, total = 0;
  for (auto idx : items) {
    const Video& video = data.videos[idx];
    const int need = cfg.clip_frames + (cfg.use_residual ? 1 : 0);
    if (video.frames < need || !video.record.label) continue;
    Clip c = eval_clip(cfg, video, (video.frames - need) / 2);
    Tensor batch = c.data.reshaped({1, 3, cfg.clip_frames, cfg.augment.crop_h, cfg.augment.crop_w});
    Tensor logits = head.forward(model.encoder->forward(batch));
    int best = 0;
    for (int cix = 1; cix < logits.dim(1); ++cix)
      if (logits.at2(0, cix) > logits.at2(0, best)) best = cix;
    correct += best == *video.record.label;
    ++total;
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

}  // namespace

FinetuneResult finetune_recognize(Model& pretrained, const Dataset& data,
                                  const std::filesystem::path& run_dir) {
  const TrainConfig& cfg = pretrained.cfg;
  const FinetuneConfig& ft = cfg.finetune;
  const int n_classes = data.n_classes();
  if (n_classes < 2) throw std::invalid_argument("finetune: dataset needs labels");
  for (auto idx : data.train)
    if (!data.videos[idx].record.label)
      throw std::invalid_argument("finetune: unlabeled training video " +
                                  data.videos[idx].record.video_id);

  std::filesystem::create_directories(run_dir);
  Rng head_rng = make_rng(derive_seed(cfg.seed, "finetune_head", 0, 0));
  Linear head(cfg.encoder.feature_dim, n_classes, head_rng);

  std::vector<ParamRef> trainable;
  head.collect_params("classifier", trainable);
  if (!ft.linear_probe)
    for (auto& p : pretrained.encoder->params()) trainable.push_back(p);
  std::vector<ParamRef> all = trainable;  // snapshot set: everything that moves

  SGD opt;
  FinetuneResult result;
  std::vector<Tensor> best_snapshot = snapshot_params(all);
  double best_val = -1;

  std::ofstream metrics(run_dir / "finetune_metrics.jsonl", std::ios::app);
  for (int epoch = 0; epoch < ft.epochs; ++epoch) {
    std::vector<std::size_t> order = data.train;
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, "finetune_order", epoch, 0));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_int(shuffle_rng, 0, static_cast<int>(i) - 1)]);

    double epoch_loss = 0;
    int n_batches = 0;
    for (std::size_t off = 0; off + ft.batch_size <= order.size(); off += ft.batch_size) {
      const int B = ft.batch_size;
      Tensor batch({B, 3, cfg.clip_frames, cfg.augment.crop_h, cfg.augment.crop_w});
      std::vector<int> labels(B);
      for (int i = 0; i < B; ++i) {
        const Video& video = data.videos[order[off + i]];
        Rng rng = make_rng(derive_seed(cfg.seed, "finetune/" + video.record.video_id, epoch, 0));
        const int need = cfg.clip_frames + (cfg.use_residual ? 1 : 0);
        int start = uniform_int(rng, 0, video.frames - need);
        Clip c = sample_clip(video, start, need, cfg.resize_h, cfg.resize_w);
        c = augment(c, cfg.augment, rng());
        if (cfg.use_residual) c = to_residual(c);
        std::memcpy(batch.data() + static_cast<std::size_t>(i) * c.data.numel(), c.data.data(),
                    c.data.numel() * sizeof(double));
        labels[i] = *video.record.label;
      }
      zero_grads(all);
      Tensor feats = pretrained.encoder->forward(batch);
      Tensor logits = head.forward(feats);
      Tensor grad_logits;
      double loss = cross_entropy(logits, labels, &grad_logits);
      Tensor grad_feats = head.backward(grad_logits);
      if (!ft.linear_probe) pretrained.encoder->backward(grad_feats);
      opt.step(trainable, ft.lr, ft.sgd_momentum, cfg.weight_decay);
      epoch_loss += loss;
      ++n_batches;
    }

    double val_acc = split_accuracy(pretrained, head, data, data.val);
    result.val_history.push_back(val_acc);
    if (val_acc > best_val) {
      best_val = val_acc;
      best_snapshot = snapshot_params(all);
    }
    metrics << json{{"epoch", epoch},
                    {"train_loss", n_batches ? epoch_loss / n_batches : 0.0},
                    {"val_accuracy", val_acc}}
                   .dump()
            << '\n';
  }

  restore_params(all, best_snapshot);
  result.best_val_accuracy = best_val;
  result.test_accuracy = split_accuracy(pretrained, head, data, data.test);
  std::ofstream(run_dir / "finetune_result.json")
      << json{{"test_accuracy", result.test_accuracy},
              {"best_val_accuracy", result.best_val_accuracy},
              {"linear_probe", ft.linear_probe}}
             .dump(2)
      << '\n';
  return result;
}

void export_embeddings(const std::vector<VideoFeature>& features,
                       const std::filesystem::path& out_path) {
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot write " + out_path.string());
  os << std::hexfloat;
  for (const auto& f : features) {
    os << f.video_id << '\t' << f.label;
    for (double v : f.vector) os << '\t' << v;
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + out_path.string());
}

std::vector<VideoFeature> read_embeddings(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<VideoFeature> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    VideoFeature f;
    std::string tok;
    std::getline(ss, f.video_id, '\t');
    std::getline(ss, tok, '\t');
    f.label = std::stoi(tok);
    while (std::getline(ss, tok, '\t')) f.vector.push_back(std::strtod(tok.c_str(), nullptr));
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace pcl
