#pragma once

// Central finite-difference oracle for MLP gradients.

#include <algorithm>
#include <cmath>
#include <random>

#include "orars/mlp.hpp"

namespace orars::testing {

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor); the floor keeps FD round-off on
// near-zero gradients (about eps_mach / h) from dominating.
inline GradientCheck check_gradients(const MlpModel& model, const Matrix& x, const LossSpec& loss,
                                     double step = 1e-6, double floor = 1e-5) {
  const auto analytic = backward(model, x, loss).grads;
  GradientCheck out;
  MlpModel probe = model;
  auto visit = [&](double& param, double grad) {
    const double saved = param;
    param = saved + step;
    const double up = batch_loss(probe, x, loss);
    param = saved - step;
    const double down = batch_loss(probe, x, loss);
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(grad), std::abs(numeric), floor});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(grad - numeric) / denom);
    ++out.parameters;
  };
  auto& layers = probe.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l].weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) visit(w[i], analytic.weights[l].data()[i]);
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) visit(layers[l].bias[i], analytic.bias[l][i]);
  }
  return out;
}

struct RandomProblem {
  MlpModel model;
  Matrix x;
  LossSpec loss;
};

// Small random network and batch for either objective; biases are randomised too so
// that no ReLU sits exactly at its kink.
inline RandomProblem random_problem(std::uint64_t seed, bool classifier) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width(2, 6);
  const std::size_t in = width(rng);
  std::vector<std::size_t> hidden{5};
  if (seed % 2 == 0) hidden.push_back(width(rng));
  RandomProblem p{make_mlp(in, hidden, classifier ? 2 : 1,
                           classifier ? Activation::softmax : Activation::identity, seed),
                  Matrix(7, in), LossSpec{}};
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& layer : p.model.mutable_layers())
    for (double& b : layer.bias) b = 0.3 * g(rng);
  for (double& v : p.x.data()) v = g(rng);
  if (classifier) {
    WeightedCrossEntropy xe;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t r = 0; r < 7; ++r) {
      xe.labels.push_back(static_cast<int>(rng() % 2));
      xe.weights.push_back(unit(rng));
    }
    p.loss = xe;
  } else {
    MeanSquaredError mse;
    for (std::size_t r = 0; r < 7; ++r) mse.targets.push_back(2.5 + g(rng));
    p.loss = mse;
  }
  return p;
}

}  // namespace orars::testing
