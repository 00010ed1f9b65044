#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gradient_check.hpp"
#include "orars/adam.hpp"
#include "orars/checkpoint.hpp"
#include "orars/error.hpp"
#include "orars/mlp.hpp"
#include "test_support.hpp"

using namespace orars;

namespace {

MlpModel zero_model(std::size_t in, std::size_t out, Activation act) {
  DenseLayer layer{Matrix(in, out), std::vector<double>(out, 0.0), act};
  return MlpModel({layer});
}

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(rows, cols);
  for (double& v : x.data()) v = g(rng);
  return x;
}

}  // namespace

TEST_CASE("forward examples") {
  SUBCASE("zero softmax head is uniform") {
    const auto out = forward(zero_model(3, 2, Activation::softmax), random_batch(4, 3, 1));
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(out(r, 0) == 0.5);
      CHECK(out(r, 1) == 0.5);
    }
  }
  SUBCASE("identity layer passes input through") {
    auto m = zero_model(3, 3, Activation::identity);
    for (std::size_t i = 0; i < 3; ++i) m.mutable_layers()[0].weights(i, i) = 1.0;
    const auto x = random_batch(5, 3, 2);
    CHECK(forward(m, x) == x);
  }
  SUBCASE("rows are independent of the batch") {
    const auto m = make_mlp(6, kDefaultHidden, 2, Activation::softmax, 3);
    const auto x = random_batch(9, 6, 4);
    const auto batched = forward(m, x);
    for (std::size_t r = 0; r < 9; ++r) {
      Matrix one(1, 6);
      std::copy(x.row(r).begin(), x.row(r).end(), one.row(0).begin());
      const auto single = forward(m, one);
      CHECK(std::abs(single(0, 0) - batched(r, 0)) <= 1e-12);
      CHECK(std::abs(single(0, 1) - batched(r, 1)) <= 1e-12);
    }
  }
  SUBCASE("softmax rows sum to one") {
    const auto m = make_mlp(4, kDefaultHidden, 2, Activation::softmax, 5);
    const auto out = forward(m, random_batch(50, 4, 6));
    for (std::size_t r = 0; r < 50; ++r) {
      CHECK(out(r, 0) > 0.0);
      CHECK(out(r, 1) > 0.0);
      CHECK(std::abs(out(r, 0) + out(r, 1) - 1.0) <= 1e-12);
    }
  }
  SUBCASE("shape mismatch") {
    const auto m = make_mlp(4, kDefaultHidden, 2, Activation::softmax, 5);
    CHECK_THROWS_AS(forward(m, random_batch(2, 5, 1)), ShapeError);
  }
}

TEST_CASE("model invariants") {
  DenseLayer a{Matrix(3, 4), std::vector<double>(4, 0.0), Activation::softmax};
  DenseLayer b{Matrix(4, 2), std::vector<double>(2, 0.0), Activation::identity};
  CHECK_THROWS_AS(MlpModel({a, b}), ShapeError);
  DenseLayer c{Matrix(5, 2), std::vector<double>(2, 0.0), Activation::identity};
  a.activation = Activation::relu;
  CHECK_THROWS_AS(MlpModel({a, c}), ShapeError);
  b.weights(0, 0) = std::nan("");
  CHECK_THROWS_AS(MlpModel({a, b}), ShapeError);

  const auto m = make_mlp(10, kDefaultHidden, 2, Activation::softmax, 1);
  CHECK(m.parameter_count() == 10 * 128 + 128 + 128 * 256 + 256 + 256 * 128 + 128 + 128 * 2 + 2);
}

TEST_CASE("weighted cross-entropy") {
  CHECK(weighted_xent_loss(0.5, 0.5, 1, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(weighted_xent_loss(0.9, 0.1, 1, 0.0) == 0.0);
  CHECK(weighted_xent_loss(0.2, 0.8, 1, 0.3) == doctest::Approx(0.06694306539426291).epsilon(1e-12));
  CHECK(weighted_xent_loss(0.2, 0.8, 0, 1.0) == doctest::Approx(-std::log(0.2)).epsilon(1e-12));
  // Clamped below at 1e-12.
  CHECK(weighted_xent_loss(1.0, 0.0, 1, 1.0) == doctest::Approx(-std::log(1e-12)));

  SUBCASE("zero iff weight zero or the true label has probability one") {
    CHECK(weighted_xent_loss(0.0, 1.0, 1, 0.7) == 0.0);
    CHECK(weighted_xent_loss(1.0, 0.0, 0, 0.7) == 0.0);
    CHECK(weighted_xent_loss(0.3, 0.7, 1, 0.7) > 0.0);
  }
}

TEST_CASE("pair weight and MSE") {
  CHECK(pair_weight(3.0, 3.0) == 0.0);
  CHECK(pair_weight(2.0, 4.5) == 1.0);
  CHECK(pair_weight(3.2, 3.5) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pair_weight(3.5, 3.2) == pair_weight(3.2, 3.5));
  CHECK(mse_loss(2, 2) == 0);
  CHECK(mse_loss(1, 3) == 4);
  CHECK(mse_loss(0.5, -0.5) == 1);
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (const bool classifier : {true, false}) {
      CAPTURE(seed);
      CAPTURE(classifier);
      const auto p = orars::testing::random_problem(seed, classifier);
      const auto check = orars::testing::check_gradients(p.model, p.x, p.loss);
      CHECK(check.max_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("backward edge cases") {
  const auto m = make_mlp(3, std::vector<std::size_t>{5}, 2, Activation::softmax, 8);
  const auto x = random_batch(4, 3, 9);

  SUBCASE("zero-weight batch gives zero gradients") {
    const auto g = backward(m, x, WeightedCrossEntropy{{1, 0, 1, 0}, {0, 0, 0, 0}}).grads;
    for (const auto& w : g.weights)
      for (const double v : w.data()) CHECK(v == 0.0);
    for (const auto& b : g.bias)
      for (const double v : b) CHECK(v == 0.0);
  }
  SUBCASE("duplicated sample has the single-sample gradient") {
    Matrix one(1, 3);
    Matrix two(2, 3);
    for (std::size_t j = 0; j < 3; ++j) one(0, j) = two(0, j) = two(1, j) = x(0, j);
    const auto g1 = backward(m, one, WeightedCrossEntropy{{1}, {0.6}}).grads;
    const auto g2 = backward(m, two, WeightedCrossEntropy{{1, 1}, {0.6, 0.6}}).grads;
    for (std::size_t l = 0; l < g1.weights.size(); ++l) {
      CHECK(orars::testing::max_abs_diff(g1.weights[l].data(), g2.weights[l].data()) <= 1e-15);
      CHECK(orars::testing::max_abs_diff(g1.bias[l], g2.bias[l]) <= 1e-15);
    }
  }
  SUBCASE("objective and head must agree") {
    CHECK_THROWS_AS(backward(m, x, MeanSquaredError{{1, 2, 3, 4}}), ShapeError);
    CHECK_THROWS_AS(backward(m, x, WeightedCrossEntropy{{1}, {1}}), ShapeError);
  }
}

TEST_CASE("adam update") {
  SUBCASE("first step moves a scalar by the learning rate") {
    DenseLayer layer{Matrix(1, 1, 0.5), {0.0}, Activation::identity};
    MlpModel m({layer});
    auto s = AdamState::for_model(m, AdamConfig{1e-4});
    auto g = Gradients::zeros_like(m);
    g.weights[0](0, 0) = 1.0;
    adam_step(m, s, g);
    CHECK(s.step == 1);
    CHECK(0.5 - m.layers()[0].weights(0, 0) == doctest::Approx(9.999999900000002e-05).epsilon(1e-9));
    CHECK(m.layers()[0].bias[0] == 0.0);
  }
  SUBCASE("zero gradients leave parameters unchanged") {
    auto m = make_mlp(3, std::vector<std::size_t>{4}, 2, Activation::softmax, 2);
    const auto before = m;
    auto s = AdamState::for_model(m);
    for (int i = 0; i < 10; ++i) adam_step(m, s, Gradients::zeros_like(m));
    CHECK(s.step == 10);
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      CHECK(m.layers()[l].weights == before.layers()[l].weights);
      CHECK(m.layers()[l].bias == before.layers()[l].bias);
    }
  }
  SUBCASE("non-finite gradient is rejected") {
    auto m = make_mlp(3, std::vector<std::size_t>{4}, 2, Activation::softmax, 2);
    auto s = AdamState::for_model(m);
    auto g = Gradients::zeros_like(m);
    g.bias[1][0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(adam_step(m, s, g), Error);
    CHECK(s.step == 0);
  }
  SUBCASE("identical runs are bitwise identical") {
    auto run = [] {
      auto p = orars::testing::random_problem(4, true);
      auto s = AdamState::for_model(p.model, AdamConfig{1e-2});
      for (int i = 0; i < 25; ++i) adam_step(p.model, s, backward(p.model, p.x, p.loss).grads);
      return p.model;
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t l = 0; l < a.layers().size(); ++l) CHECK(a.layers()[l].weights == b.layers()[l].weights);
  }
}

TEST_CASE("checkpoint round-trip and corruption") {
  orars::testing::TempDir dir("ckpt");
  Checkpoint ckpt;
  ckpt.model = make_mlp(7, kDefaultHidden, 2, Activation::softmax, 77);
  ckpt.config.seed = 1234567890123ULL;
  ckpt.config.pairs_per_epoch = 99;
  ckpt.agop_mode = AgopMode::literal;
  save_model(ckpt, dir / "m.ckpt");

  const auto back = load_model(dir / "m.ckpt");
  CHECK(back.kind == ModelKind::pairwise_classifier);
  CHECK(back.agop_mode == AgopMode::literal);
  CHECK(back.config.seed == ckpt.config.seed);
  CHECK(back.config.pairs_per_epoch == 99);
  CHECK(back.config.learning_rate == ckpt.config.learning_rate);
  const auto x = random_batch(16, 7, 3);
  const auto a = forward(ckpt.model, x);
  const auto b = forward(back.model, x);
  CHECK(orars::testing::max_abs_diff(a.data(), b.data()) <= 1e-12);

  std::ifstream in(dir / "m.ckpt");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  SUBCASE("truncated file") {
    std::ofstream(dir / "t.ckpt") << text.substr(0, text.size() / 2);
    CHECK_THROWS_AS(load_model(dir / "t.ckpt"), ParseError);
  }
  SUBCASE("wrong version") {
    std::string v2 = text;
    v2.replace(v2.find(" 1\n"), 3, " 2\n");
    std::ofstream(dir / "v.ckpt") << v2;
    CHECK_THROWS_AS(load_model(dir / "v.ckpt"), VersionError);
  }
  SUBCASE("not a checkpoint") {
    std::ofstream(dir / "x.ckpt") << "hello world\n";
    CHECK_THROWS_AS(load_model(dir / "x.ckpt"), ParseError);
  }
}
