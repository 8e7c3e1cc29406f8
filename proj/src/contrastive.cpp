#include "pcl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pcl/heads.hpp"

namespace pcl {

namespace {

void check_unit(const double* v, int d, const char* what) {
  double n2 = 0;
  for (int i = 0; i < d; ++i) n2 += v[i] * v[i];
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-3)
    throw std::invalid_argument(std::string(what) + ": vector not unit-norm");
}

double dot(const double* a, const double* b, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void NCEConfig::validate() const {
  if (temperature <= 0) throw std::invalid_argument("temperature: must be > 0");
  if (n_negatives < 1) throw std::invalid_argument("n_negatives: must be >= 1");
  if (momentum < 0 || momentum >= 1) throw std::invalid_argument("momentum: must be in [0,1)");
  if (negatives != "bank" && negatives != "in_batch")
    throw std::invalid_argument("negatives: must be 'bank' or 'in_batch'");
}

EmbeddingBank::EmbeddingBank(int n_videos, int dim, std::uint64_t seed)
    : n_videos_(n_videos), dim_(dim), view1_({n_videos, dim}), view2_({n_videos, dim}) {
  if (n_videos < 2 || dim < 1) throw std::invalid_argument("EmbeddingBank: bad size");
  Rng rng = make_rng(seed);
  for (Tensor* t : {&view1_, &view2_}) {
    for (std::size_t i = 0; i < t->numel(); ++i) (*t)[i] = gaussian(rng);
    normalize_rows(*t);
  }
}

const Tensor& EmbeddingBank::view(int v) const {
  if (v == 1) return view1_;
  if (v == 2) return view2_;
  throw std::invalid_argument("EmbeddingBank: view must be 1 or 2");
}

Tensor& EmbeddingBank::mutable_view(int v) {
  return const_cast<Tensor&>(static_cast<const EmbeddingBank*>(this)->view(v));
}

void EmbeddingBank::update(int video_index, int view_idx, const std::vector<double>& fresh,
                           double m) {
  if (video_index < 0 || video_index >= n_videos_)
    throw std::out_of_range("EmbeddingBank: video index out of range");
  if (static_cast<int>(fresh.size()) != dim_)
    throw std::invalid_argument("EmbeddingBank: dim mismatch");
  check_unit(fresh.data(), dim_, "EmbeddingBank::update");
  Tensor& v = mutable_view(view_idx);
  double n2 = 0;
  for (int d = 0; d < dim_; ++d) {
    double x = m * v.at2(video_index, d) + (1.0 - m) * fresh[d];
    v.at2(video_index, d) = x;
    n2 += x * x;
  }
  double inv = 1.0 / std::max(std::sqrt(n2), 1e-12);
  for (int d = 0; d < dim_; ++d) v.at2(video_index, d) *= inv;
}

std::vector<int> EmbeddingBank::sample_negatives(int anchor_video_index, int k, Rng& rng) const {
  if (k < 1 || k > n_videos_ - 1)
    throw std::invalid_argument("sample_negatives: k must be in [1, N-1], got " + std::to_string(k));
  std::vector<int> pool;
  pool.reserve(n_videos_ - 1);
  for (int i = 0; i < n_videos_; ++i)
    if (i != anchor_video_index) pool.push_back(i);
  // partial Fisher-Yates over the pool
  for (int i = 0; i < k; ++i)
    std::swap(pool[i], pool[uniform_int(rng, i, static_cast<int>(pool.size()) - 1)]);
  pool.resize(k);
  return pool;
}

Tensor EmbeddingBank::gather(int view_idx, const std::vector<int>& rows) const {
  const Tensor& v = view(view_idx);
  Tensor out({static_cast<int>(rows.size()), dim_});
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int d = 0; d < dim_; ++d) out.at2(static_cast<int>(r), d) = v.at2(rows[r], d);
  return out;
}

double similarity(const std::vector<double>& a, const std::vector<double>& b, double tau) {
  if (a.size() != b.size()) throw std::invalid_argument("similarity: dim mismatch");
  if (tau <= 0) throw std::invalid_argument("similarity: tau must be > 0");
  check_unit(a.data(), static_cast<int>(a.size()), "similarity(a)");
  check_unit(b.data(), static_cast<int>(b.size()), "similarity(b)");
  return std::exp(dot(a.data(), b.data(), static_cast<int>(a.size())) / tau);
}

double nce_loss(const std::vector<double>& z1, const std::vector<double>& z2,
                const Tensor& negs1, const Tensor& negs2, double tau,
                std::vector<double>* grad_z1, std::vector<double>* grad_z2) {
  const int D = static_cast<int>(z1.size());
  if (static_cast<int>(z2.size()) != D) throw std::invalid_argument("nce_loss: dim mismatch");
  if (negs1.rank() != 2 || negs2.rank() != 2 || negs1.dim(1) != D || negs2.dim(1) != D)
    throw std::invalid_argument("nce_loss: negatives must be [k, D]");
  if (negs1.dim(0) < 1 || negs2.dim(0) < 1)
    throw std::invalid_argument("nce_loss: empty negative set");
  if (tau <= 0) throw std::invalid_argument("nce_loss: tau must be > 0");
  check_unit(z1.data(), D, "nce_loss(z1)");
  check_unit(z2.data(), D, "nce_loss(z2)");

  const double d_pos = std::exp(dot(z1.data(), z2.data(), D) / tau);

  if (grad_z1) grad_z1->assign(D, 0.0);
  if (grad_z2) grad_z2->assign(D, 0.0);

  double total = 0;
  // direction 1: anchor z1, negatives against z1; direction 2: anchor z2.
  for (int dir = 0; dir < 2; ++dir) {
    const double* anchor = dir == 0 ? z1.data() : z2.data();
    const Tensor& negs = dir == 0 ? negs1 : negs2;
    const int k = negs.dim(0);
    double denom = d_pos;
    std::vector<double> d_neg(k);
    for (int j = 0; j < k; ++j) {
      check_unit(negs.data() + static_cast<std::size_t>(j) * D, D, "nce_loss(negative)");
      d_neg[j] = std::exp(dot(anchor, negs.data() + static_cast<std::size_t>(j) * D, D) / tau);
      denom += d_neg[j];
    }
    total += -std::log(d_pos / denom);
    if (grad_z1 && grad_z2) {
      const double p0 = d_pos / denom;
      std::vector<double>& g_anchor = dir == 0 ? *grad_z1 : *grad_z2;
      std::vector<double>& g_other = dir == 0 ? *grad_z2 : *grad_z1;
      const double* other = dir == 0 ? z2.data() : z1.data();
      for (int d = 0; d < D; ++d) {
        g_anchor[d] += -(1.0 - p0) * other[d] / tau;
        g_other[d] += -(1.0 - p0) * anchor[d] / tau;
      }
      for (int j = 0; j < k; ++j) {
        const double pj = d_neg[j] / denom;
        const double* nj = negs.data() + static_cast<std::size_t>(j) * D;
        for (int d = 0; d < D; ++d) g_anchor[d] += pj * nj[d] / tau;
      }
    }
  }
  return total;
}

}  // namespace pcl
