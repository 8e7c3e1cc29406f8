#pragma once

#include <cstdint>
#include <vector>

#include "pcl/nn.hpp"

namespace pcl {

// fc-relu-fc projection to a low-dimensional space, followed by L2
// normalization. Rows are unit length on output.
class ProjectionHead {
 public:
  ProjectionHead(int in_dim, int out_dim, std::uint64_t init_seed, int hidden_dim = 0);

  Tensor forward(const Tensor& features);         // [B,in] -> [B,out], unit rows
  Tensor backward(const Tensor& grad_embeddings); // -> grad wrt features

  std::vector<ParamRef> params();
  int out_dim() const { return out_dim_; }
  // number of rows that hit the zero-norm epsilon guard since construction
  long zero_guard_hits() const { return zero_guard_hits_; }

 private:
  int out_dim_;
  Sequential net_;
  Tensor pre_norm_;  // cached pre-normalization activations
  long zero_guard_hits_ = 0;

  static constexpr double kEps = 1e-12;
};

// Task classifier g: single linear map from (possibly concatenated) encoder
// features to class logits.
class PretextHead {
 public:
  PretextHead(int in_dim, int n_classes, std::uint64_t init_seed);

  Tensor forward(const Tensor& features);
  Tensor backward(const Tensor& grad_logits);
  std::vector<ParamRef> params();
  int n_classes() const { return n_classes_; }

 private:
  int n_classes_;
  Linear fc_;
};

// Mean softmax cross-entropy over the batch. grad_logits, when non-null,
// receives d(loss)/d(logits).
double cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     Tensor* grad_logits = nullptr);

// Row-wise L2 normalization (no parameters); helper shared with the bank.
void normalize_rows(Tensor& m, double eps = 1e-12);

}  // namespace pcl
