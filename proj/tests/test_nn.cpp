#include <doctest.h>

#include "pcl/nn.hpp"
#include "test_util.hpp"

using namespace pcl;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = gaussian(rng, 0.0, 0.5);
  return t;
}

double sum_mul(const Tensor& a, const Tensor& w) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * w[i];
  return s;
}

// Check both parameter gradients and the input gradient of a layer against
// central differences on the scalar loss sum(out * probe).
void layer_gradcheck(Layer& layer, const Tensor& input, Rng& rng, double tol = 1e-6) {
  Tensor probe;  // fixed random projection so the loss is scalar
  {
    Tensor out = layer.forward(input);
    probe = random_tensor(out.shape(), rng);
    layer.backward(probe);  // fills param grads
  }
  std::vector<ParamRef> params;
  layer.collect_params("p", params);

  Tensor in = input;
  auto loss = [&]() { return sum_mul(layer.forward(in), probe); };
  if (!params.empty()) {
    Rng pick = make_rng(rng());
    double err = pcl::test::max_rel_grad_error(params, loss, 40, pick);
    CHECK(err < tol);
  }

  // input gradient
  zero_grads(params);
  layer.forward(in);
  Tensor gin = layer.backward(probe);
  Rng pick = make_rng(rng());
  for (int s = 0; s < 20; ++s) {
    std::size_t i = static_cast<std::size_t>(
        uniform_int(pick, 0, static_cast<int>(in.numel()) - 1));
    const double saved = in[i];
    const double h = 1e-5 * std::max(1.0, std::abs(saved));
    in[i] = saved + h;
    double lp = loss();
    in[i] = saved - h;
    double lm = loss();
    in[i] = saved;
    double num = (lp - lm) / (2 * h);
    double denom = std::max({std::abs(gin[i]), std::abs(num), 1e-8});
    CHECK(std::abs(gin[i] - num) / denom < tol);
  }
}

}  // namespace

TEST_CASE("Linear forward matches explicit matmul") {
  Rng rng = make_rng(1);
  Linear lin(3, 2, rng);
  Tensor x({2, 3}, {1, 2, 3, -1, 0, 1});
  Tensor y = lin.forward(x);
  REQUIRE(y.shape() == std::vector<int>{2, 2});
  for (int b = 0; b < 2; ++b)
    for (int o = 0; o < 2; ++o) {
      double want = lin.bias[o];
      for (int i = 0; i < 3; ++i) want += lin.weight.at2(o, i) * x.at2(b, i);
      CHECK(y.at2(b, o) == doctest::Approx(want));
    }
}

TEST_CASE("Linear gradcheck") {
  Rng rng = make_rng(2);
  Linear lin(5, 4, rng);
  layer_gradcheck(lin, random_tensor({3, 5}, rng), rng);
}

TEST_CASE("ReLU forward and backward") {
  ReLU relu;
  Tensor x({1, 4}, {-1.0, 0.0, 2.0, -0.5});
  Tensor y = relu.forward(x);
  CHECK(y[0] == 0.0);
  CHECK(y[2] == 2.0);
  Tensor g({1, 4}, {1, 1, 1, 1});
  Tensor gin = relu.backward(g);
  CHECK(gin[0] == 0.0);
  CHECK(gin[2] == 1.0);
}

TEST_CASE("GlobalAvgPool3d averages over T*H*W") {
  GlobalAvgPool3d pool;
  Rng rng = make_rng(3);
  Tensor x = random_tensor({2, 3, 2, 2, 2}, rng);
  Tensor y = pool.forward(x);
  REQUIRE(y.shape() == std::vector<int>{2, 3});
  double want = 0;
  for (int i = 0; i < 8; ++i) want += x[i];
  CHECK(y.at2(0, 0) == doctest::Approx(want / 8));
  layer_gradcheck(pool, x, rng);
}

TEST_CASE("Conv3d identity kernel reproduces the input") {
  Rng rng = make_rng(4);
  Conv3d conv(1, 1, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}, rng);
  conv.weight.fill(1.0);
  conv.bias.fill(0.0);
  Tensor x = random_tensor({1, 1, 2, 3, 3}, rng);
  Tensor y = conv.forward(x);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("Conv3d output shape with stride and padding") {
  Rng rng = make_rng(5);
  Conv3d conv(3, 4, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}, rng);
  Tensor x = random_tensor({2, 3, 4, 8, 8}, rng);
  Tensor y = conv.forward(x);
  CHECK(y.shape() == std::vector<int>{2, 4, 4, 4, 4});
}

TEST_CASE("Conv3d matches a brute-force correlation oracle") {
  Rng rng = make_rng(6);
  int Cin = 2, Cout = 3;
  std::array<int, 3> K = {3, 3, 3}, S = {1, 2, 2}, P = {1, 1, 1};
  Conv3d conv(Cin, Cout, K, S, P, rng);
  Tensor x = random_tensor({1, Cin, 4, 6, 6}, rng);
  Tensor y = conv.forward(x);
  int T = 4, H = 3, W = 3;
  auto xin = [&](int c, int t, int h, int w) -> double {
    if (t < 0 || t >= 4 || h < 0 || h >= 6 || w < 0 || w >= 6) return 0.0;
    return x[((static_cast<std::size_t>(c) * 4 + t) * 6 + h) * 6 + w];
  };
  for (int co = 0; co < Cout; ++co)
    for (int t = 0; t < T; ++t)
      for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
          double want = conv.bias[co];
          for (int ci = 0; ci < Cin; ++ci)
            for (int kt = 0; kt < K[0]; ++kt)
              for (int kh = 0; kh < K[1]; ++kh)
                for (int kw = 0; kw < K[2]; ++kw)
                  want += conv.weight[((((static_cast<std::size_t>(co) * Cin + ci) * K[0] + kt) *
                                            K[1] +
                                        kh) *
                                           K[2] +
                                       kw)] *
                          xin(ci, t * S[0] + kt - P[0], h * S[1] + kh - P[1],
                              w * S[2] + kw - P[2]);
          double got = y[(((static_cast<std::size_t>(co)) * T + t) * H + h) * W + w];
          CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
}

TEST_CASE("Conv3d gradcheck") {
  Rng rng = make_rng(7);
  Conv3d conv(2, 2, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}, rng);
  layer_gradcheck(conv, random_tensor({2, 2, 3, 6, 6}, rng), rng, 1e-5);
}

TEST_CASE("Sequential composes and names parameters by position") {
  Rng rng = make_rng(8);
  auto seq = std::make_unique<Sequential>();
  seq->add(std::make_unique<Linear>(4, 5, rng));
  seq->add(std::make_unique<ReLU>());
  seq->add(std::make_unique<Linear>(5, 2, rng));
  std::vector<ParamRef> params;
  seq->collect_params("net", params);
  REQUIRE(params.size() == 4);
  CHECK(params[0].name == "net.0.weight");
  CHECK(params[3].name == "net.2.bias");
  layer_gradcheck(*seq, random_tensor({3, 4}, rng), rng);
}

TEST_CASE("ResidualBlock with identity shortcut") {
  Rng rng = make_rng(9);
  auto body = std::make_unique<Sequential>();
  body->add(std::make_unique<Conv3d>(2, 2, std::array<int, 3>{3, 3, 3},
                                     std::array<int, 3>{1, 1, 1}, std::array<int, 3>{1, 1, 1},
                                     rng));
  body->add(std::make_unique<ReLU>());
  body->add(std::make_unique<Conv3d>(2, 2, std::array<int, 3>{3, 3, 3},
                                     std::array<int, 3>{1, 1, 1}, std::array<int, 3>{1, 1, 1},
                                     rng));
  ResidualBlock block(std::move(body), nullptr);
  Tensor x = random_tensor({1, 2, 3, 4, 4}, rng);
  layer_gradcheck(block, x, rng, 1e-5);
}

TEST_CASE("ResidualBlock with projection shortcut changes channels") {
  Rng rng = make_rng(10);
  auto body = std::make_unique<Sequential>();
  body->add(std::make_unique<Conv3d>(2, 3, std::array<int, 3>{3, 3, 3},
                                     std::array<int, 3>{1, 2, 2}, std::array<int, 3>{1, 1, 1},
                                     rng));
  auto shortcut = std::make_unique<Conv3d>(2, 3, std::array<int, 3>{1, 1, 1},
                                           std::array<int, 3>{1, 2, 2},
                                           std::array<int, 3>{0, 0, 0}, rng);
  ResidualBlock block(std::move(body), std::move(shortcut));
  Tensor x = random_tensor({1, 2, 3, 6, 6}, rng);
  Tensor y = block.forward(x);
  CHECK(y.shape() == std::vector<int>{1, 3, 3, 3, 3});
  layer_gradcheck(block, x, rng, 1e-5);
}

TEST_CASE("batch rows are processed independently") {
  Rng rng = make_rng(11);
  Conv3d conv(2, 3, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng);
  Tensor a = random_tensor({1, 2, 3, 4, 4}, rng);
  Tensor b = random_tensor({1, 2, 3, 4, 4}, rng);
  Tensor both({2, 2, 3, 4, 4});
  for (std::size_t i = 0; i < a.numel(); ++i) {
    both[i] = a[i];
    both[a.numel() + i] = b[i];
  }
  Tensor ya = conv.forward(a);
  Tensor yb = conv.forward(b);
  Tensor yboth = conv.forward(both);
  for (std::size_t i = 0; i < ya.numel(); ++i) {
    CHECK(yboth[i] == doctest::Approx(ya[i]).epsilon(1e-12));
    CHECK(yboth[ya.numel() + i] == doctest::Approx(yb[i]).epsilon(1e-12));
  }
}

TEST_CASE("zero_grads and param_count") {
  Rng rng = make_rng(12);
  Linear lin(3, 2, rng);
  std::vector<ParamRef> params;
  lin.collect_params("p", params);
  CHECK(param_count(params) == 3 * 2 + 2);
  lin.weight_grad.fill(5.0);
  zero_grads(params);
  for (std::size_t i = 0; i < lin.weight_grad.numel(); ++i) CHECK(lin.weight_grad[i] == 0.0);
}
