// End-to-end acceptance gate. Each criterion is selected by number on the
// command line and prints exactly one PASS/FAIL line; the exit code mirrors
// it. Criterion 7 exercises the installed CLI binary, whose path arrives as
// the second argument.
//
//   acceptance <criterion 1..8> [path-to-cli-binary]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pcl/clip.hpp"
#include "pcl/config.hpp"
#include "pcl/contrastive.hpp"
#include "pcl/eval.hpp"
#include "pcl/pretext.hpp"
#include "pcl/rng.hpp"
#include "pcl/synthetic.hpp"
#include "pcl/train.hpp"

namespace fs = std::filesystem;
using namespace pcl;

namespace {

std::string g_cli_binary;

std::vector<double> random_unit(int dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm = 0;
  do {
    norm = 0;
    for (double& x : v) {
      x = gaussian(rng);
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------- criterion 1

// Independent oracle: each direction of the pair loss is a (k+1)-way softmax
// cross-entropy with the positive as class 0, evaluated via log-sum-exp.
double softmax_ce_direction(const std::vector<double>& anchor, const std::vector<double>& pos,
                            const Tensor& negs, double tau) {
  const int k = negs.dim(0), d = static_cast<int>(anchor.size());
  std::vector<double> logits(k + 1, 0.0);
  for (int j = 0; j < d; ++j) logits[0] += anchor[j] * pos[j] / tau;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) logits[i + 1] += anchor[j] * negs.at2(i, j) / tau;
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (double l : logits) sum += std::exp(l - mx);
  return -(logits[0] - mx - std::log(sum));
}

bool criterion_nce_oracle(std::string& detail) {
  constexpr double kTolAbs = 1e-6;  // pinned
  const int ks[3] = {1, 7, 63};
  Rng rng = make_rng(20240817);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    int k = ks[i % 3];
    int dim = 4 + (i % 29);
    auto z1 = random_unit(dim, rng), z2 = random_unit(dim, rng);
    Tensor n1({k, dim}), n2({k, dim});
    for (int r = 0; r < k; ++r) {
      auto a = random_unit(dim, rng), b = random_unit(dim, rng);
      for (int j = 0; j < dim; ++j) {
        n1.at2(r, j) = a[j];
        n2.at2(r, j) = b[j];
      }
    }
    double tau = 0.05 + 0.2 * (i % 7) / 6.0;
    double got = nce_loss(z1, z2, n1, n2, tau);
    double want = softmax_ce_direction(z1, z2, n1, tau) + softmax_ce_direction(z2, z1, n2, tau);
    worst = std::max(worst, std::abs(got - want));
  }
  std::ostringstream ss;
  ss << "pair loss vs softmax-CE oracle, 200 instances, k in {1,7,63}: max |diff| = " << worst
     << " (tol " << kTolAbs << ")";
  detail = ss.str();
  return worst < kTolAbs;
}

// ---------------------------------------------------------------- criterion 2

TrainConfig gradcheck_config(double alpha) {
  TrainConfig c;
  c.seed = 11;
  c.task = PretextTaskKind::transform;
  c.use_contrastive = true;
  c.use_residual = true;
  c.alpha = alpha;
  c.batch_size = 2;
  c.epochs = 1;
  c.clip_frames = 4;
  c.encoder.width_multiplier = 0.1;
  c.encoder.feature_dim = 8;
  c.projection_dim = 8;
  c.nce.n_negatives = 3;
  c.augment.crop_h = 16;
  c.augment.crop_w = 16;
  c.eval.clips_per_video = 2;
  c.encoder.in_frames = c.clip_frames;
  c.encoder.in_h = c.augment.crop_h;
  c.encoder.in_w = c.augment.crop_w;
  c.validate();
  return c;
}

bool criterion_gradcheck(std::string& detail) {
  constexpr double kTolRel = 1e-4;  // pinned
  SyntheticSpec spec;
  spec.n_classes = 4;
  spec.videos_per_class = 3;
  spec.frames_per_video = 16;
  spec.frame_h = 16;
  spec.frame_w = 16;
  Dataset data = generate_synthetic_dataset(spec, 3);

  double worst = 0;
  for (double alpha : {0.0, 0.5, 1.0}) {
    TrainConfig cfg = gradcheck_config(alpha);
    Model model = build_model(cfg);
    init_bank_for(model, static_cast<int>(data.train.size()));
    std::vector<std::size_t> items(data.train.begin(), data.train.begin() + cfg.batch_size);
    std::vector<int> rows(items.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    Batch batch = make_batch(cfg, data, items, rows, model, 0, 0);

    auto params = model.params();
    zero_grads(params);
    batch_loss(model, batch, true);

    // sample 50 scalar parameters uniformly over the whole registry
    std::size_t total = 0;
    for (const ParamRef& p : params) total += p.value->numel();
    Rng pick = make_rng(99);
    for (int s = 0; s < 50; ++s) {
      std::size_t flat =
          static_cast<std::size_t>(uniform(pick, 0.0, 1.0) * static_cast<double>(total));
      flat = std::min(flat, total - 1);
      std::size_t off = flat;
      for (const ParamRef& p : params) {
        if (off >= p.value->numel()) {
          off -= p.value->numel();
          continue;
        }
        double& w = (*p.value)[off];
        const double analytic = (*p.grad)[off];
        const double h = 1e-5 * std::max(1.0, std::abs(w));
        const double w0 = w;
        w = w0 + h;
        double lp = batch_loss(model, batch, false).total;
        w = w0 - h;
        double lm = batch_loss(model, batch, false).total;
        w = w0;
        double numeric = (lp - lm) / (2 * h);
        double rel = std::abs(analytic - numeric) /
                     std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, rel);
        break;
      }
    }
  }
  std::ostringstream ss;
  ss << "joint-loss gradients vs central differences, 50 params x alpha {0,0.5,1}: max rel err = "
     << worst << " (tol " << kTolRel << ")";
  detail = ss.str();
  return worst < kTolRel;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_residual(std::string& detail) {
  Rng rng = make_rng(5150);
  for (int i = 0; i < 100; ++i) {
    int T = 2 + (i % 7), H = 4 + (i % 5), W = 4 + ((i / 2) % 5);
    Clip in;
    in.data = Tensor({3, T, H, W});
    for (double& v : in.data.vec()) v = uniform(rng, 0.0, 1.0);
    Clip out = to_residual(in);
    if (out.domain != ValueDomain::residual || out.frames() != T - 1) {
      detail = "bad residual shape/domain";
      return false;
    }
    for (int c = 0; c < 3; ++c)
      for (int t = 0; t < T - 1; ++t)
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            double want = in.at(c, t + 1, y, x) - in.at(c, t, y, x);
            double got = out.at(c, t, y, x);
            if (std::memcmp(&want, &got, sizeof(double)) != 0) {
              detail = "residual mismatch (not bitwise equal to subtraction oracle)";
              return false;
            }
          }
  }
  // constant video -> exactly zero residual
  Clip flat;
  flat.data = Tensor({3, 5, 6, 6});
  for (double& v : flat.data.vec()) v = 0.375;
  Clip fo = to_residual(flat);
  for (double v : fo.data.vec())
    if (v != 0.0) {
      detail = "constant video residual is not exactly zero";
      return false;
    }
  detail = "frame-difference subtraction oracle, 100 clips, bitwise equal; constant video -> 0";
  return true;
}

// ---------------------------------------------------------------- criterion 4

bool clips_equal(const Clip& a, const Clip& b) {
  return a.data.same_shape(b.data) && a.data.vec() == b.data.vec();
}

bool criterion_pretext_bijections(std::string& detail) {
  Rng rng = make_rng(31);
  Clip clip;
  clip.data = Tensor({3, 4, 10, 10});  // square frames, even T
  for (double& v : clip.data.vec()) v = uniform(rng, 0.0, 1.0);

  // order-task codec: every 3! permutation round-trips to a distinct label
  std::vector<int> perm = {0, 1, 2};
  std::vector<int> seen;
  do {
    int label = permutation_to_label(perm);
    if (label_to_permutation(label, 3) != perm) {
      detail = "order label codec does not round-trip";
      return false;
    }
    seen.push_back(label);
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 6; ++i)
    if (seen[static_cast<std::size_t>(i)] != i) {
      detail = "order labels are not exactly 0..5";
      return false;
    }

  // rotations invert for every class
  for (int label = 0; label < 4; ++label) {
    Clip rot = apply_rotation(clip, label);
    Clip back = apply_rotation(rot, (4 - label) % 4);
    if (!clips_equal(back, clip)) {
      detail = "rotation class " + std::to_string(label) + " does not invert";
      return false;
    }
  }

  // the five-way transform set inverts for every class
  for (int label = 0; label < kTransformClasses; ++label) {
    Clip tr = apply_transform(clip, label);
    Clip back = tr;
    switch (label) {
      case 1: back = rotate90(rotate90(rotate90(tr))); break;
      case 2: back = rotate180(tr); break;
      case 3: back = temporal_reverse(tr); break;
      case 4: back = temporal_adjacent_swap(tr); break;
      default: break;
    }
    if (!clips_equal(back, clip)) {
      detail = "transform class " + std::to_string(label) + " does not invert";
      return false;
    }
  }
  detail = "order codec round-trips 3! labels; rotation and transform classes all invert";
  return true;
}

// ---------------------------------------------------------------- criterion 5

std::vector<VideoFeature> random_features(int n, int dim, int n_classes, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<VideoFeature> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].video_id = "f" + std::to_string(i);
    out[i].label = i % n_classes;
    out[i].vector.resize(dim);
    for (double& x : out[i].vector) x = gaussian(rng);
  }
  return out;
}

bool criterion_retrieval_oracle(std::string& detail) {
  const std::vector<int> ks = {1, 5, 10, 20, 50};
  auto gallery = random_features(200, 16, 4, 71);
  auto queries = random_features(50, 16, 4, 72);
  RetrievalReport rep = knn_retrieval(queries, gallery, ks);

  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
  };
  for (int k : ks) {
    int hits = 0;
    for (const auto& q : queries) {
      std::vector<std::pair<double, int>> scored;
      for (int g = 0; g < 200; ++g) scored.emplace_back(cosine(q.vector, gallery[g].vector), g);
      std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (int i = 0; i < k; ++i)
        if (gallery[scored[static_cast<std::size_t>(i)].second].label == q.label) {
          ++hits;
          break;
        }
    }
    if (rep.topk_accuracy.at(k) != static_cast<double>(hits) / 50.0) {
      detail = "hit@" + std::to_string(k) + " differs from the brute-force oracle";
      return false;
    }
  }

  // label-independent gaussian features: top-1 hit rate must sit at chance
  // (1/4) within 3 sigma of the 50-query binomial
  double p = 0.25, sigma = std::sqrt(p * (1 - p) / 50.0);
  double observed = rep.topk_accuracy.at(1);
  std::ostringstream ss;
  ss << "exact match vs brute force (50x200, k in {1,5,10,20,50}); chance calibration top-1 = "
     << observed << " in 0.25 +/- " << 3 * sigma;
  detail = ss.str();
  return std::abs(observed - p) <= 3 * sigma;
}

// ---------------------------------------------------------------- criterion 6

double run_retrieval_top1(const TrainConfig& base, std::uint64_t seed, const Dataset& data,
                          const std::string& tag) {
  TrainConfig cfg = base;
  cfg.seed = seed;
  fs::path dir = fresh_dir("accept_signal_" + tag + "_s" + std::to_string(seed));
  TrainResult res = train(cfg, data, dir);
  Checkpoint peek = peek_checkpoint(res.best_checkpoint);
  Model model = build_model(peek.cfg);
  load_checkpoint(res.best_checkpoint, model, nullptr);
  std::vector<std::size_t> g(data.train.begin(), data.train.end());
  std::vector<std::size_t> q(data.test.begin(), data.test.end());
  auto gallery = extract_video_features(model, data, g);
  auto queries = extract_video_features(model, data, q);
  RetrievalReport rep = knn_retrieval(queries, gallery, cfg.eval.topk);
  fs::remove_all(dir);
  return rep.overall_top1;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

bool criterion_learning_signal(std::string& detail) {
  SyntheticSpec spec;  // 8 classes x 40 videos
  Dataset data = generate_synthetic_dataset(spec, 1);

  TrainConfig joint = desk_preset();
  TrainConfig pretext_only = joint;
  pretext_only.use_contrastive = false;
  TrainConfig contrast_only = joint;
  contrast_only.task = PretextTaskKind::none;

  std::vector<double> tj, tp, tc;
  for (std::uint64_t seed : {1, 2, 3}) {
    tj.push_back(run_retrieval_top1(joint, seed, data, "joint"));
    tp.push_back(run_retrieval_top1(pretext_only, seed, data, "pretext"));
    tc.push_back(run_retrieval_top1(contrast_only, seed, data, "contrast"));
  }
  double mj = median3(tj), mp = median3(tp), mc = median3(tc);
  std::ostringstream ss;
  ss << "median top-1 over seeds {1,2,3}: joint = " << mj << ", pretext-only = " << mp
     << ", contrastive-only = " << mc
     << "; require joint >= 0.25, joint >= pretext-only, joint >= contrastive-only - 0.02";
  detail = ss.str();
  return mj >= 0.25 && mj >= mp && mj >= mc - 0.02;
}

// ---------------------------------------------------------------- criterion 7

int run_cli(const std::string& args) {
  std::string cmd = "\"" + g_cli_binary + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

bool check_grid(const fs::path& dir, const std::string& matrix, const fs::path& manifest,
                std::size_t n_cells, std::string& detail) {
  fs::path mfile = dir / "matrix.json";
  std::ofstream(mfile) << matrix;
  fs::path out = dir / "grid";
  if (run_cli("ablate --matrix \"" + mfile.string() + "\" --data \"" + manifest.string() +
              "\" --out \"" + out.string() + "\"") != 0) {
    detail = "ablate invocation failed";
    return false;
  }
  auto rows = read_tsv(out / "results.tsv");
  if (rows.size() != n_cells + 1) {
    detail = "results.tsv has " + std::to_string(rows.size()) + " rows, expected " +
             std::to_string(n_cells + 1);
    return false;
  }
  for (const std::string& col : {"cell", "task", "contrastive", "residual", "augment", "alpha",
                                 "top1"})
    if (std::find(rows[0].begin(), rows[0].end(), col) == rows[0].end()) {
      detail = "results.tsv is missing column " + col;
      return false;
    }
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].size() != rows[0].size()) {
      detail = "ragged row in results.tsv";
      return false;
    }
  return true;
}

bool criterion_ablation_machinery(std::string& detail) {
  if (g_cli_binary.empty()) {
    detail = "no CLI binary path given";
    return false;
  }
  fs::path dir = fresh_dir("accept_ablate");
  std::ofstream(dir / "spec.json")
      << R"({"n_classes":4,"videos_per_class":4,"frames_per_video":24})";
  if (run_cli("synth --spec \"" + (dir / "spec.json").string() + "\" --out \"" +
              (dir / "data").string() + "\" --seed 1") != 0) {
    detail = "synth invocation failed";
    return false;
  }
  fs::path manifest = dir / "data" / "manifest.tsv";

  // component grid: every on/off combination the report tables enumerate
  const std::string base =
      R"("base":{"epochs":1,"encoder":{"width_multiplier":0.25},"eval":{"clips_per_video":2}})";
  const std::string component_grid = R"({"preset":"desk",)" + base + R"(,"cells":[
    {"name":"pretext","overrides":{"use_contrastive":false,"use_residual":false,"use_augment":false}},
    {"name":"pretext_res","overrides":{"use_contrastive":false,"use_augment":false}},
    {"name":"contrast","overrides":{"task":"none","use_residual":false,"use_augment":false}},
    {"name":"contrast_res_aug","overrides":{"task":"none"}},
    {"name":"joint","overrides":{"use_residual":false,"use_augment":false}},
    {"name":"joint_aug","overrides":{"use_residual":false}},
    {"name":"joint_res","overrides":{"use_augment":false}},
    {"name":"joint_res_aug","overrides":{}}
  ]})";
  if (!check_grid(dir, component_grid, manifest, 8, detail)) return false;

  const std::string alpha_grid = R"({"preset":"desk",)" + base + R"(,"cells":[
    {"name":"alpha_0.1","overrides":{"alpha":0.1}},
    {"name":"alpha_0.5","overrides":{"alpha":0.5}},
    {"name":"alpha_1.0","overrides":{"alpha":1.0}},
    {"name":"alpha_10","overrides":{"alpha":10.0}}
  ]})";
  fs::path dir2 = fresh_dir("accept_ablate_alpha");
  if (!check_grid(dir2, alpha_grid, manifest, 4, detail)) return false;

  fs::remove_all(dir);
  fs::remove_all(dir2);
  detail = "8-cell component grid and 4-cell alpha grid each emit one well-formed report row "
           "per cell";
  return true;
}

// ---------------------------------------------------------------- criterion 8

bool criterion_determinism(std::string& detail) {
  SyntheticSpec spec;
  spec.videos_per_class = 5;  // determinism needs the full pipeline, not the full corpus
  Dataset data = generate_synthetic_dataset(spec, 1);
  TrainConfig cfg = desk_preset();
  cfg.epochs = 3;
  fs::path d1 = fresh_dir("accept_det_1"), d2 = fresh_dir("accept_det_2");
  train(cfg, data, d1);
  train(cfg, data, d2);
  std::string a = slurp(d1 / "metrics.jsonl"), b = slurp(d2 / "metrics.jsonl");
  fs::remove_all(d1);
  fs::remove_all(d2);
  if (a.empty() || a != b) {
    detail = "metrics logs differ between identical 3-epoch runs";
    return false;
  }
  detail = "two identical 3-epoch runs produced byte-identical metrics logs";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <criterion 1..8> [cli-binary]\n";
    return 2;
  }
  int n = std::atoi(argv[1]);
  if (argc > 2) g_cli_binary = argv[2];

  using CriterionFn = bool (*)(std::string&);
  const std::pair<const char*, CriterionFn> table[8] = {
      {"contrastive pair loss oracle", criterion_nce_oracle},
      {"joint loss gradient check", criterion_gradcheck},
      {"residual clip exactness", criterion_residual},
      {"pretext bijections", criterion_pretext_bijections},
      {"retrieval oracle and calibration", criterion_retrieval_oracle},
      {"desk-scale learning signal", criterion_learning_signal},
      {"ablation grid machinery", criterion_ablation_machinery},
      {"training determinism", criterion_determinism},
  };
  if (n < 1 || n > 8) {
    std::cerr << "criterion out of range\n";
    return 2;
  }

  auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = table[n - 1].second(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (ok ? "PASS" : "FAIL") << " [" << n << "] " << table[n - 1].first << ": " << detail
            << " (" << secs << " s)\n";
  return ok ? 0 : 1;
}
