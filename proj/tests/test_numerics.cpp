#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "core/layers.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace confrec;
using testsupport::near;

TEST_CASE("substream seeds are deterministic and decorrelated") {
  CHECK(substream_seed(42, "split") == substream_seed(42, "split"));
  CHECK(substream_seed(42, "split") != substream_seed(42, "shuffle"));
  CHECK(substream_seed(42, "split") != substream_seed(43, "split"));
  Rng a = make_rng(7, "init");
  Rng b = make_rng(7, "init");
  CHECK(a() == b());
}

TEST_CASE("fnv1a64 frozen value") {
  // FNV-1a of "abc" per the published test vectors.
  CHECK(fnv1a64("abc") == 0xe71fa2190541574bULL);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("dot and norm oracles") {
  CHECK(near(dot({1, 2, 3}, {4, 5, 6}), 32.0));
  CHECK(near(norm2({3, 4}), 5.0));
  CHECK_THROWS_AS(dot({1}, {1, 2}), DataError);
}

TEST_CASE("matvec oracles") {
  DenseMatrix W(2, 2);
  W.at(0, 0) = 1;
  W.at(0, 1) = 2;
  W.at(1, 0) = 3;
  W.at(1, 1) = 4;
  Vec y = matvec(W, {1, 1});
  CHECK(near(y[0], 3.0));
  CHECK(near(y[1], 7.0));
  Vec yt = matvec_transposed(W, {1, 1});
  CHECK(near(yt[0], 4.0));
  CHECK(near(yt[1], 6.0));
}

TEST_CASE("add_outer and frobenius oracles") {
  DenseMatrix A(2, 2, 0.0);
  add_outer(A, {1, 2}, {3, 4}, 2.0);
  CHECK(near(A.at(0, 0), 6.0));
  CHECK(near(A.at(0, 1), 8.0));
  CHECK(near(A.at(1, 0), 12.0));
  CHECK(near(A.at(1, 1), 16.0));
  CHECK(near(frobenius_sq(A), 36 + 64 + 144 + 256));
}

TEST_CASE("cosine similarity oracle and bounds") {
  // 32 / sqrt(14 * 77), computed independently.
  CHECK(near(cosine_similarity({1, 2, 3}, {4, 5, 6}), 0.9746318461970762, 1e-12));
  CHECK(near(cosine_similarity({2, 0}, {0, 3}), 0.0));
  CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 1}), DataError);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    Vec p(5), q(5);
    for (int i = 0; i < 5; ++i) {
      p[i] = g(rng);
      q[i] = g(rng);
    }
    const double c = cosine_similarity(p, q);
    CHECK(c <= 1.0 + 1e-12);
    CHECK(c >= -1.0 - 1e-12);
    CHECK(near(cosine_similarity(p, p), 1.0, 1e-12));
  }
}

TEST_CASE("one_hot layout") {
  Vec v = one_hot(2, 4);
  CHECK(v == Vec{0, 0, 1, 0});
  CHECK_THROWS_AS(one_hot(4, 4), DataError);
}

TEST_CASE("init_params is seeded and bounded") {
  DenseMatrix a = init_params(6, 4, InitScheme::uniform_scaled, 9);
  DenseMatrix b = init_params(6, 4, InitScheme::uniform_scaled, 9);
  DenseMatrix c = init_params(6, 4, InitScheme::uniform_scaled, 10);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  const double bound = std::sqrt(6.0 / (4 + 6));
  for (double v : a.data) CHECK(std::fabs(v) <= bound);
  DenseMatrix z = init_params(3, 3, InitScheme::zeros, 1);
  for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("activation values and derivatives") {
  CHECK(near(activate_scalar(Activation::sigmoid, 0.0), 0.5));
  CHECK(near(activate_scalar(Activation::relu, -1.0), 0.0));
  CHECK(near(activate_scalar(Activation::relu, 2.5), 2.5));
  CHECK(near(activate_scalar(Activation::tanh, 0.0), 0.0));
  CHECK(near(activate_scalar(Activation::identity, -3.0), -3.0));

  // derivative from the post-activation value, upstream = 1
  Vec d = activation_backward(Activation::sigmoid, {0.5}, {1.0});
  CHECK(near(d[0], 0.25));
  d = activation_backward(Activation::tanh, {0.5}, {1.0});
  CHECK(near(d[0], 0.75));
  d = activation_backward(Activation::relu, {0.0, 2.0}, {1.0, 1.0});
  CHECK(near(d[0], 0.0));
  CHECK(near(d[1], 1.0));

  CHECK(activation_from_name("sigmoid") == Activation::sigmoid);
  CHECK(activation_name(Activation::tanh) == "tanh");
  CHECK_THROWS_AS(activation_from_name("swish"), ConfigError);
}

TEST_CASE("affine forward oracle") {
  DenseMatrix W(2, 2);
  W.at(0, 0) = 1;
  W.at(0, 1) = 2;
  W.at(1, 0) = 3;
  W.at(1, 1) = 4;
  Vec y = affine_forward(W, {1, 1}, {1, 1});
  CHECK(near(y[0], 4.0));
  CHECK(near(y[1], 8.0));
}

TEST_CASE("mlp forward oracle on hand-set weights") {
  Mlp mlp = Mlp::make({2, 2, 1}, {Activation::sigmoid, Activation::identity}, "t", 1);
  // layer 1 = identity matrix, zero bias; layer 2 sums with bias 0.5
  mlp.layers[0].W.value.fill(0.0);
  mlp.layers[0].W.value.at(0, 0) = 1.0;
  mlp.layers[0].W.value.at(1, 1) = 1.0;
  mlp.layers[0].b.value.fill(0.0);
  mlp.layers[1].W.value.at(0, 0) = 1.0;
  mlp.layers[1].W.value.at(0, 1) = 1.0;
  mlp.layers[1].b.value.at(0, 0) = 0.5;

  Vec y = mlp_forward(mlp, {0.0, 0.0});
  CHECK(near(y[0], 1.5));  // sigmoid(0) + sigmoid(0) + 0.5
  y = mlp_forward(mlp, {1.0, -1.0});
  const double s1 = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(near(y[0], s1 + (1.0 - s1) + 0.5, 1e-12));
}

TEST_CASE("mlp gradients match finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Mlp mlp = Mlp::make({3, 4, 2}, {Activation::tanh, Activation::sigmoid}, "g",
                        1000 + trial);
    Vec x(3), target(2);
    for (auto& v : x) v = g(rng);
    for (auto& v : target) v = g(rng);

    std::vector<ParamBlock*> blocks;
    mlp.collect_params(blocks);
    const double worst = finite_diff_check(blocks, [&](bool with_grad) {
      MlpTrace trace;
      Vec y = mlp_forward(mlp, x, &trace);
      double loss = 0.0;
      Vec up(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        loss += (y[i] - target[i]) * (y[i] - target[i]);
        up[i] = 2.0 * (y[i] - target[i]);
      }
      if (with_grad) mlp_backward(mlp, trace, up);
      return loss;
    });
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("mlp_backward input gradient matches finite differences") {
  Mlp mlp = Mlp::make({3, 3, 1}, {Activation::sigmoid, Activation::identity}, "gx", 5);
  Vec x{0.3, -0.2, 0.7};
  auto loss_at = [&](const Vec& in) {
    Vec y = mlp_forward(mlp, in);
    return y[0] * y[0];
  };
  MlpTrace trace;
  Vec y = mlp_forward(mlp, x, &trace);
  std::vector<ParamBlock*> blocks;
  mlp.collect_params(blocks);
  for (auto* b : blocks) b->zero_grad();
  Vec gx = mlp_backward(mlp, trace, {2.0 * y[0]});
  for (int i = 0; i < 3; ++i) {
    Vec xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    const double fd = (loss_at(xp) - loss_at(xm)) / 2e-6;
    CHECK(near(gx[i], fd, 1e-6));
  }
}

TEST_CASE("sgd step oracle") {
  ParamBlock w("w", DenseMatrix(1, 1, 1.0));
  w.grad.at(0, 0) = 0.5;
  OptimizerState opt;
  opt.kind = OptimizerKind::sgd;
  opt.learning_rate = 0.1;
  std::vector<ParamBlock*> blocks{&w};
  optimizer_step(opt, blocks);
  CHECK(near(w.value.at(0, 0), 0.95));
  CHECK(near(w.grad.at(0, 0), 0.0));  // gradients cleared by the step

  // weight decay folds into the gradient: g' = g + wd * w
  ParamBlock w2("w2", DenseMatrix(1, 1, 1.0));
  w2.grad.at(0, 0) = 0.5;
  OptimizerState opt2;
  opt2.kind = OptimizerKind::sgd;
  opt2.learning_rate = 0.1;
  opt2.weight_decay = 0.1;
  std::vector<ParamBlock*> blocks2{&w2};
  optimizer_step(opt2, blocks2);
  CHECK(near(w2.value.at(0, 0), 0.94));
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
  ParamBlock w("w", DenseMatrix(1, 1, 0.0));
  w.grad.at(0, 0) = 3.0;
  OptimizerState opt;
  opt.kind = OptimizerKind::adam;
  opt.learning_rate = 0.1;
  std::vector<ParamBlock*> blocks{&w};
  optimizer_step(opt, blocks);
  // bias-corrected first step is lr * g / (|g| + eps)
  CHECK(near(w.value.at(0, 0), -0.1, 1e-6));
}

TEST_CASE("adam converges on a scalar quadratic") {
  ParamBlock w("w", DenseMatrix(1, 1, 5.0));
  OptimizerState opt;
  opt.kind = OptimizerKind::adam;
  opt.learning_rate = 0.1;
  std::vector<ParamBlock*> blocks{&w};
  for (int t = 0; t < 500; ++t) {
    w.grad.at(0, 0) = 2.0 * (w.value.at(0, 0) - 3.0);
    optimizer_step(opt, blocks);
  }
  CHECK(std::fabs(w.value.at(0, 0) - 3.0) < 0.05);
}

TEST_CASE("zero learning rate is a no-op") {
  for (OptimizerKind kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    ParamBlock w("w", DenseMatrix(2, 2, 1.5));
    w.grad.fill(7.0);
    OptimizerState opt;
    opt.kind = kind;
    opt.learning_rate = 0.0;
    std::vector<ParamBlock*> blocks{&w};
    optimizer_step(opt, blocks);
    for (double v : w.value.data) CHECK(v == 1.5);
  }
}

TEST_CASE("non-finite gradient raises a TrainError naming the block") {
  ParamBlock w("enc.W0", DenseMatrix(1, 1, 0.0));
  w.grad.at(0, 0) = std::nan("");
  OptimizerState opt;
  std::vector<ParamBlock*> blocks{&w};
  CHECK_THROWS_WITH_AS(optimizer_step(opt, blocks),
                       doctest::Contains("enc.W0"), TrainError);
}

TEST_CASE("finite_diff_check accepts an exact gradient and rejects a wrong one") {
  ParamBlock w("w", DenseMatrix(1, 2, 0.0));
  w.value.at(0, 0) = 1.0;
  w.value.at(0, 1) = -2.0;
  std::vector<ParamBlock*> blocks{&w};

  const double ok = finite_diff_check(blocks, [&](bool with_grad) {
    const double a = w.value.at(0, 0);
    const double b = w.value.at(0, 1);
    if (with_grad) {
      w.grad.at(0, 0) += 2.0 * a;
      w.grad.at(0, 1) += 2.0 * b;
    }
    return a * a + b * b;
  });
  CHECK(ok < 1e-8);

  const double bad = finite_diff_check(blocks, [&](bool with_grad) {
    const double a = w.value.at(0, 0);
    const double b = w.value.at(0, 1);
    if (with_grad) {
      w.grad.at(0, 0) += 2.0 * a + 1.0;  // deliberately off
      w.grad.at(0, 1) += 2.0 * b;
    }
    return a * a + b * b;
  });
  CHECK(bad > 1e-2);
}
