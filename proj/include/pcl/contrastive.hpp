#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcl/rng.hpp"
#include "pcl/tensor.hpp"

namespace pcl {

struct NCEConfig {
  double temperature = 0.07;
  int n_negatives = 1024;   // clamped to N-1 at bank construction
  double momentum = 0.5;    // bank update momentum, in [0,1)
  std::string negatives = "bank";  // bank | in_batch

  void validate() const;
};

// Two per-video embedding tables, one per view. Rows stay unit-norm.
class EmbeddingBank {
 public:
  EmbeddingBank() = default;
  EmbeddingBank(int n_videos, int dim, std::uint64_t seed);

  int size() const { return n_videos_; }
  int dim() const { return dim_; }

  const Tensor& view(int v) const;  // v in {1,2}
  Tensor& mutable_view(int v);

  // momentum update of one row: normalize(m*old + (1-m)*fresh)
  void update(int video_index, int view_idx, const std::vector<double>& fresh, double m);

  // k distinct row indices drawn uniformly from [0,N) \ {anchor}
  std::vector<int> sample_negatives(int anchor_video_index, int k, Rng& rng) const;

  Tensor gather(int view_idx, const std::vector<int>& rows) const;  // [k, dim]

 private:
  int n_videos_ = 0, dim_ = 0;
  Tensor view1_, view2_;
};

// exp(<a,b>/tau); inputs must be unit vectors (checked to 1e-3).
double similarity(const std::vector<double>& a, const std::vector<double>& b, double tau);

// Two-direction NCE term for one positive pair. z1, z2: [D]; negs1, negs2:
// [k, D]. Optional output gradients w.r.t. z1 and z2 (negatives are treated
// as constants, matching bank-stored features).
double nce_loss(const std::vector<double>& z1, const std::vector<double>& z2,
                const Tensor& negs1, const Tensor& negs2, double tau,
                std::vector<double>* grad_z1 = nullptr, std::vector<double>* grad_z2 = nullptr);

}  // namespace pcl
