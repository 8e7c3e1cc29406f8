#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pcl/train.hpp"

namespace pcl {

struct VideoFeature {
  std::string video_id;
  std::vector<double> vector;
  int label = -1;
};

struct RetrievalReport {
  std::map<int, double> topk_accuracy;          // k -> hit rate
  std::map<int, double> per_class_top1;         // class -> top-1 accuracy
  std::map<int, int> class_sizes;               // query count per class
  std::vector<std::pair<std::pair<int, int>, int>> confusions;  // ((true, predicted), count)
  double overall_top1 = 0;
};

// Per-video feature: mean of clips_per_video uniformly spaced clip features
// (encoder output by default, projected embedding behind a flag). Videos too
// short for the configured clip length are skipped and reported.
std::vector<VideoFeature> extract_video_features(Model& model, const Dataset& data,
                                                 const std::vector<std::size_t>& items,
                                                 std::vector<std::string>* skipped = nullptr);

// Cosine-similarity kNN over the gallery; hit@k when any of the k nearest
// neighbors shares the query label. Ties break toward the lower gallery index.
RetrievalReport knn_retrieval(const std::vector<VideoFeature>& queries,
                              const std::vector<VideoFeature>& gallery,
                              const std::vector<int>& ks);

void write_retrieval_report(const RetrievalReport& report, const std::filesystem::path& out_dir);

struct FinetuneResult {
  double test_accuracy = 0;
  double best_val_accuracy = 0;
  std::vector<double> val_history;
};

// Supervised fine-tuning: fresh linear classifier over encoder features;
// full fine-tune by default, encoder frozen under linear_probe. Best-val
// weights are evaluated on the test split.
FinetuneResult finetune_recognize(Model& pretrained, const Dataset& data,
                                  const std::filesystem::path& run_dir);

// Lossless tabular dump: video_id, label, then the vector as hexfloats.
void export_embeddings(const std::vector<VideoFeature>& features,
                       const std::filesystem::path& out_path);
std::vector<VideoFeature> read_embeddings(const std::filesystem::path& path);

}  // namespace pcl
