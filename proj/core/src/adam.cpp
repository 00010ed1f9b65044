#include "orars/adam.hpp"

#include <cmath>

#include "orars/error.hpp"

namespace orars {

namespace {

void check_shapes(const MlpModel& m, const Gradients& g, const char* what) {
  const auto& layers = m.layers();
  bool ok = g.weights.size() == layers.size() && g.bias.size() == layers.size();
  for (std::size_t l = 0; ok && l < layers.size(); ++l) {
    ok = g.weights[l].rows() == layers[l].weights.rows() &&
         g.weights[l].cols() == layers[l].weights.cols() &&
         g.bias[l].size() == layers[l].bias.size();
  }
  if (!ok) throw ShapeError(std::string(what) + " shapes do not match the model");
}

template <typename Update>
void for_each_parameter(MlpModel& m, AdamState& s, const Gradients& g, Update&& update) {
  auto& layers = m.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l].weights.data();
    const auto& gw = g.weights[l].data();
    auto& mw = s.first_moment.weights[l].data();
    auto& vw = s.second_moment.weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) update(w[i], gw[i], mw[i], vw[i]);

    auto& b = layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) {
      update(b[i], g.bias[l][i], s.first_moment.bias[l][i], s.second_moment.bias[l][i]);
    }
  }
}

}  // namespace

AdamState AdamState::for_model(const MlpModel& m, AdamConfig config) {
  return {config, 0, Gradients::zeros_like(m), Gradients::zeros_like(m)};
}

void adam_step(MlpModel& m, AdamState& s, const Gradients& grads) {
  check_shapes(m, grads, "gradient");
  check_shapes(m, s.first_moment, "first moment");
  check_shapes(m, s.second_moment, "second moment");
  for (const auto& gw : grads.weights)
    for (const double v : gw.data())
      if (!std::isfinite(v)) throw Error("adam_step: non-finite gradient");
  for (const auto& gb : grads.bias)
    for (const double v : gb)
      if (!std::isfinite(v)) throw Error("adam_step: non-finite gradient");

  const auto& c = s.config;
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for_each_parameter(m, s, grads, [&](double& p, double g, double& mom, double& vel) {
    mom = c.beta1 * mom + (1.0 - c.beta1) * g;
    vel = c.beta2 * vel + (1.0 - c.beta2) * g * g;
    const double m_hat = mom / correction1;
    const double v_hat = vel / correction2;
    p -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  });
}

}  // namespace orars
