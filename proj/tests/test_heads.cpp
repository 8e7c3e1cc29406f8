#include <doctest.h>

#include "pcl/heads.hpp"
#include "test_util.hpp"

using namespace pcl;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = gaussian(rng, 0.0, 0.5);
  return t;
}

}  // namespace

TEST_CASE("cross_entropy matches a log-softmax oracle") {
  Rng rng = make_rng(1);
  Tensor logits = random_tensor({3, 4}, rng);
  std::vector<int> labels = {2, 0, 3};
  double got = cross_entropy(logits, labels);
  double want = 0;
  for (int b = 0; b < 3; ++b) {
    double denom = 0;
    for (int c = 0; c < 4; ++c) denom += std::exp(logits.at2(b, c));
    want += -std::log(std::exp(logits.at2(b, labels[b])) / denom);
  }
  CHECK(got == doctest::Approx(want / 3).epsilon(1e-12));
}

TEST_CASE("cross_entropy is shift-invariant and numerically stable") {
  Tensor a({1, 3}, {1.0, 2.0, 3.0});
  Tensor b({1, 3}, {1001.0, 1002.0, 1003.0});
  CHECK(cross_entropy(a, {1}) == doctest::Approx(cross_entropy(b, {1})).epsilon(1e-12));
  CHECK(std::isfinite(cross_entropy(b, {1})));
}

TEST_CASE("cross_entropy gradient is (softmax - onehot)/B") {
  Rng rng = make_rng(2);
  Tensor logits = random_tensor({2, 5}, rng);
  Tensor grad;
  cross_entropy(logits, {4, 1}, &grad);
  for (int b = 0; b < 2; ++b) {
    double denom = 0;
    for (int c = 0; c < 5; ++c) denom += std::exp(logits.at2(b, c));
    for (int c = 0; c < 5; ++c) {
      double p = std::exp(logits.at2(b, c)) / denom;
      double y = (c == (b == 0 ? 4 : 1)) ? 1.0 : 0.0;
      CHECK(grad.at2(b, c) == doctest::Approx((p - y) / 2).epsilon(1e-9));
    }
  }
}

TEST_CASE("cross_entropy rejects out-of-range labels") {
  Tensor logits({2, 3});
  CHECK_THROWS(cross_entropy(logits, {0, 3}));
  CHECK_THROWS(cross_entropy(logits, {-1, 0}));
  CHECK_THROWS(cross_entropy(logits, {0}));  // label count mismatch
}

TEST_CASE("projection head emits unit rows (or zero rows behind the guard)") {
  ProjectionHead head(6, 4, 77);
  Rng rng = make_rng(3);
  Tensor feats = random_tensor({5, 6}, rng);
  Tensor z = head.forward(feats);
  REQUIRE(z.shape() == std::vector<int>{5, 4});
  long zero_rows = 0;
  for (int b = 0; b < 5; ++b) {
    double n2 = 0;
    for (int j = 0; j < 4; ++j) n2 += z.at2(b, j) * z.at2(b, j);
    if (n2 == 0.0)
      ++zero_rows;  // a fully dead ReLU row; must be counted by the guard
    else
      CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(head.zero_guard_hits() == zero_rows);
}

TEST_CASE("projection head zero-norm guard counts degenerate rows") {
  ProjectionHead head(6, 4, 77);
  // dead input alone is survivable thanks to the nonzero output bias
  Tensor zeros({2, 6});
  head.forward(zeros);
  CHECK(head.zero_guard_hits() == 0);
  // an all-zero network is the one truly degenerate case
  for (auto& p : head.params()) p.value->zero();
  Tensor z = head.forward(zeros);
  CHECK(head.zero_guard_hits() == 2);
  for (std::size_t i = 0; i < z.numel(); ++i) CHECK(std::isfinite(z[i]));
}

TEST_CASE("projection head gradcheck through the normalization") {
  ProjectionHead head(5, 3, 11);
  Rng rng = make_rng(4);
  Tensor feats = random_tensor({3, 5}, rng);
  Tensor probe = random_tensor({3, 3}, rng);
  auto loss = [&]() {
    Tensor z = head.forward(feats);
    double s = 0;
    for (std::size_t i = 0; i < z.numel(); ++i) s += z[i] * probe[i];
    return s;
  };
  auto params = head.params();
  zero_grads(params);
  head.forward(feats);
  Tensor gfeats = head.backward(probe);
  Rng pick = make_rng(5);
  CHECK(pcl::test::max_rel_grad_error(params, loss, 40, pick) < 1e-5);
  // input gradient too
  for (int s = 0; s < 15; ++s) {
    std::size_t i = static_cast<std::size_t>(
        uniform_int(pick, 0, static_cast<int>(feats.numel()) - 1));
    const double saved = feats[i];
    const double h = 1e-6 * std::max(1.0, std::abs(saved));
    feats[i] = saved + h;
    double lp = loss();
    feats[i] = saved - h;
    double lm = loss();
    feats[i] = saved;
    double num = (lp - lm) / (2 * h);
    double denom = std::max({std::abs(gfeats[i]), std::abs(num), 1e-8});
    CHECK(std::abs(gfeats[i] - num) / denom < 1e-5);
  }
}

TEST_CASE("projection head construction is deterministic in the seed") {
  ProjectionHead a(4, 3, 9), b(4, 3, 9), c(4, 3, 10);
  Rng rng = make_rng(6);
  Tensor x = random_tensor({2, 4}, rng);
  CHECK(a.forward(x).vec() == b.forward(x).vec());
  CHECK(a.forward(x).vec() != c.forward(x).vec());
}

TEST_CASE("pretext head is a linear classifier over features") {
  PretextHead head(6, 4, 21);
  CHECK(head.n_classes() == 4);
  Rng rng = make_rng(7);
  Tensor feats = random_tensor({3, 6}, rng);
  Tensor logits = head.forward(feats);
  CHECK(logits.shape() == std::vector<int>{3, 4});
  auto params = head.params();
  CHECK(param_count(params) == 6 * 4 + 4);
  // end-to-end gradcheck with cross-entropy on top
  std::vector<int> labels = {1, 3, 0};
  auto loss = [&]() { return cross_entropy(head.forward(feats), labels); };
  zero_grads(params);
  Tensor grad_logits;
  cross_entropy(head.forward(feats), labels, &grad_logits);
  head.backward(grad_logits);
  Rng pick = make_rng(8);
  CHECK(pcl::test::max_rel_grad_error(params, loss, 30, pick) < 1e-6);
}

TEST_CASE("normalize_rows makes every row unit length") {
  Rng rng = make_rng(9);
  Tensor m = random_tensor({4, 5}, rng);
  normalize_rows(m);
  for (int r = 0; r < 4; ++r) {
    double n2 = 0;
    for (int c = 0; c < 5; ++c) n2 += m.at2(r, c) * m.at2(r, c);
    CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
