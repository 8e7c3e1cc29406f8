#include "pcl/heads.hpp"

#include <cmath>
#include <stdexcept>

namespace pcl {

ProjectionHead::ProjectionHead(int in_dim, int out_dim, std::uint64_t init_seed, int hidden_dim)
    : out_dim_(out_dim) {
  if (hidden_dim <= 0) hidden_dim = in_dim;
  Rng rng = make_rng(init_seed);
  net_.add(std::make_unique<Linear>(in_dim, hidden_dim, rng));
  net_.add(std::make_unique<ReLU>());
  auto fc2 = std::make_unique<Linear>(hidden_dim, out_dim, rng);
  // nonzero output bias: a fully dead ReLU row still yields a normalizable
  // embedding instead of a zero vector
  for (std::size_t i = 0; i < fc2->bias.numel(); ++i) fc2->bias[i] = uniform(rng, -0.1, 0.1);
  net_.add(std::move(fc2));
}

Tensor ProjectionHead::forward(const Tensor& features) {
  check_finite(features, "projection input");
  pre_norm_ = net_.forward(features);
  Tensor z = pre_norm_;
  const int B = z.dim(0), D = z.dim(1);
  for (int b = 0; b < B; ++b) {
    double n2 = 0;
    for (int d = 0; d < D; ++d) n2 += z.at2(b, d) * z.at2(b, d);
    double n = std::sqrt(n2);
    if (n < kEps) ++zero_guard_hits_;
    double inv = 1.0 / std::max(n, kEps);
    for (int d = 0; d < D; ++d) z.at2(b, d) *= inv;
  }
  return z;
}

Tensor ProjectionHead::backward(const Tensor& grad_embeddings) {
  // z = w/|w|; dL/dw = (I - z z^T) g / |w|
  const int B = pre_norm_.dim(0), D = pre_norm_.dim(1);
  Tensor grad_pre({B, D});
  for (int b = 0; b < B; ++b) {
    double n2 = 0;
    for (int d = 0; d < D; ++d) n2 += pre_norm_.at2(b, d) * pre_norm_.at2(b, d);
    double n = std::max(std::sqrt(n2), kEps);
    double dot = 0;
    for (int d = 0; d < D; ++d) dot += pre_norm_.at2(b, d) * grad_embeddings.at2(b, d);
    dot /= (n * n);
    for (int d = 0; d < D; ++d)
      grad_pre.at2(b, d) = (grad_embeddings.at2(b, d) - pre_norm_.at2(b, d) * dot) / n;
  }
  return net_.backward(grad_pre);
}

std::vector<ParamRef> ProjectionHead::params() {
  std::vector<ParamRef> out;
  net_.collect_params("projection", out);
  return out;
}

namespace {
Linear make_linear(int in_dim, int out_dim, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return Linear(in_dim, out_dim, rng);
}
}  // namespace

PretextHead::PretextHead(int in_dim, int n_classes, std::uint64_t init_seed)
    : n_classes_(n_classes), fc_(make_linear(in_dim, n_classes, init_seed)) {
  if (n_classes < 2) throw std::invalid_argument("PretextHead: need at least 2 classes");
}

Tensor PretextHead::forward(const Tensor& features) { return fc_.forward(features); }
Tensor PretextHead::backward(const Tensor& grad_logits) { return fc_.backward(grad_logits); }

std::vector<ParamRef> PretextHead::params() {
  std::vector<ParamRef> out;
  fc_.collect_params("pretext_head", out);
  return out;
}

double cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* grad_logits) {
  const int B = logits.dim(0), C = logits.dim(1);
  if (static_cast<int>(labels.size()) != B)
    throw std::invalid_argument("cross_entropy: batch size mismatch");
  if (grad_logits) *grad_logits = Tensor({B, C});
  double loss = 0;
  for (int b = 0; b < B; ++b) {
    if (labels[b] < 0 || labels[b] >= C)
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[b]) +
                              " out of range [0," + std::to_string(C) + ")");
    double mx = logits.at2(b, 0);
    for (int c = 1; c < C; ++c) mx = std::max(mx, logits.at2(b, c));
    double sum = 0;
    for (int c = 0; c < C; ++c) sum += std::exp(logits.at2(b, c) - mx);
    double lse = mx + std::log(sum);
    loss += lse - logits.at2(b, labels[b]);
    if (grad_logits)
      for (int c = 0; c < C; ++c) {
        double p = std::exp(logits.at2(b, c) - lse);
        grad_logits->at2(b, c) = (p - (c == labels[b] ? 1.0 : 0.0)) / B;
      }
  }
  return loss / B;
}

void normalize_rows(Tensor& m, double eps) {
  const int R = m.dim(0), C = m.dim(1);
  for (int r = 0; r < R; ++r) {
    double n2 = 0;
    for (int c = 0; c < C; ++c) n2 += m.at2(r, c) * m.at2(r, c);
    double inv = 1.0 / std::max(std::sqrt(n2), eps);
    for (int c = 0; c < C; ++c) m.at2(r, c) *= inv;
  }
}

}  // namespace pcl
