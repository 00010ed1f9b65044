#include "orars/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "orars/error.hpp"

namespace orars {

namespace {

// out = in * W + b, row by row.
void affine(const Matrix& in, const DenseLayer& layer, Matrix& out) {
  const std::size_t n_in = layer.input_dim();
  const std::size_t n_out = layer.output_dim();
  out = Matrix(in.rows(), n_out);
  const double* w = layer.weights.data().data();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* x = in.row(r).data();
    double* y = out.row(r).data();
    std::copy(layer.bias.begin(), layer.bias.end(), y);
    for (std::size_t k = 0; k < n_in; ++k) {
      const double a = x[k];
      if (a == 0.0) continue;
      const double* wk = w + k * n_out;
      for (std::size_t j = 0; j < n_out; ++j) y[j] += a * wk[j];
    }
  }
}

void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::identity:
      return;
    case Activation::relu:
      for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::softmax:
      for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const double peak = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
          v = std::exp(v - peak);
          sum += v;
        }
        for (double& v : row) v /= sum;
      }
      return;
  }
}

void check_batch(const MlpModel& m, const Matrix& x) {
  if (m.layers().empty()) throw ShapeError("model has no layers");
  if (x.cols() != m.input_dim()) {
    throw ShapeError("input width " + std::to_string(x.cols()) + " != model input_dim " +
                     std::to_string(m.input_dim()));
  }
}

// Activations a_0 = x, a_{l+1} = act(a_l W_l + b_l).
std::vector<Matrix> forward_all(const MlpModel& m, const Matrix& x) {
  std::vector<Matrix> acts;
  acts.reserve(m.layers().size() + 1);
  acts.push_back(x);
  for (const auto& layer : m.layers()) {
    Matrix z;
    affine(acts.back(), layer, z);
    apply_activation(layer.activation, z);
    acts.push_back(std::move(z));
  }
  return acts;
}

void check_loss_shape(const MlpModel& m, const Matrix& x, const LossSpec& loss) {
  const std::size_t b = x.rows();
  if (const auto* xe = std::get_if<WeightedCrossEntropy>(&loss)) {
    if (m.layers().back().activation != Activation::softmax || m.output_dim() != 2) {
      throw ShapeError("weighted cross-entropy needs a 2-unit softmax output");
    }
    if (xe->labels.size() != b || xe->weights.size() != b) {
      throw ShapeError("labels/weights length does not match batch size");
    }
  } else {
    const auto& mse = std::get<MeanSquaredError>(loss);
    if (m.layers().back().activation != Activation::identity || m.output_dim() != 1) {
      throw ShapeError("MSE needs a single identity output unit");
    }
    if (mse.targets.size() != b) throw ShapeError("targets length does not match batch size");
  }
  if (b == 0) throw ShapeError("empty batch");
}

double loss_from_outputs(const Matrix& out, const LossSpec& loss) {
  double total = 0.0;
  if (const auto* xe = std::get_if<WeightedCrossEntropy>(&loss)) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      total += weighted_xent_loss(out(r, 0), out(r, 1), xe->labels[r], xe->weights[r]);
    }
  } else {
    const auto& mse = std::get<MeanSquaredError>(loss);
    for (std::size_t r = 0; r < out.rows(); ++r) total += mse_loss(out(r, 0), mse.targets[r]);
  }
  return total / static_cast<double>(out.rows());
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "softmax") return Activation::softmax;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::softmax:
      return "softmax";
    case Activation::identity:
      break;
  }
  return "identity";
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.output_dim()) {
      throw ShapeError("layer " + std::to_string(l) + ": bias length != output width");
    }
    if (l > 0 && layers_[l - 1].output_dim() != layer.input_dim()) {
      throw ShapeError("layer " + std::to_string(l) + ": input width does not match previous layer");
    }
    if (layer.activation == Activation::softmax && l + 1 != layers_.size()) {
      throw ShapeError("softmax is only allowed on the final layer");
    }
  }
  check_finite();
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.data().size() + l.bias.size();
  return n;
}

void MlpModel::check_finite() const {
  for (const auto& l : layers_) {
    for (const double v : l.weights.data())
      if (!std::isfinite(v)) throw ShapeError("model has a non-finite weight");
    for (const double v : l.bias)
      if (!std::isfinite(v)) throw ShapeError("model has a non-finite bias");
  }
}

MlpModel make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                  std::size_t output_dim, Activation output_activation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t fan_in = input_dim;
  auto add = [&](std::size_t width, Activation act) {
    DenseLayer layer{Matrix(fan_in, width), std::vector<double>(width, 0.0), act};
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weights.data()) w = dist(rng);
    layers.push_back(std::move(layer));
    fan_in = width;
  };
  for (const std::size_t h : hidden) add(h, Activation::relu);
  add(output_dim, output_activation);
  return MlpModel(std::move(layers));
}

Matrix forward(const MlpModel& m, const Matrix& x) {
  check_batch(m, x);
  Matrix a = x;
  for (const auto& layer : m.layers()) {
    Matrix z;
    affine(a, layer, z);
    apply_activation(layer.activation, z);
    a = std::move(z);
  }
  return a;
}

double weighted_xent_loss(double p0, double p1, int label, double weight) {
  const double lp0 = std::log(std::max(p0, kLogClamp));
  const double lp1 = std::log(std::max(p1, kLogClamp));
  const double l = label ? 1.0 : 0.0;
  return weight * (-(1.0 - l) * lp0 - l * lp1);
}

double pair_weight(double score_i, double score_j) {
  return std::min(std::abs(score_i - score_j), 1.0);
}

double mse_loss(double prediction, double target) {
  const double d = prediction - target;
  return d * d;
}

double batch_loss(const MlpModel& m, const Matrix& x, const LossSpec& loss) {
  check_batch(m, x);
  check_loss_shape(m, x, loss);
  return loss_from_outputs(forward(m, x), loss);
}

Gradients Gradients::zeros_like(const MlpModel& m) {
  Gradients g;
  for (const auto& l : m.layers()) {
    g.weights.emplace_back(l.weights.rows(), l.weights.cols());
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

LossAndGradients backward(const MlpModel& m, const Matrix& x, const LossSpec& loss) {
  check_batch(m, x);
  check_loss_shape(m, x, loss);

  const auto acts = forward_all(m, x);
  const Matrix& out = acts.back();
  const std::size_t batch = x.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);

  LossAndGradients result{loss_from_outputs(out, loss), Gradients::zeros_like(m)};

  // delta = dLoss / d(pre-activation) of the current layer.
  Matrix delta(batch, m.output_dim());
  if (const auto* xe = std::get_if<WeightedCrossEntropy>(&loss)) {
    for (std::size_t r = 0; r < batch; ++r) {
      const double w = xe->weights[r] * inv_batch;
      const double l = xe->labels[r] ? 1.0 : 0.0;
      delta(r, 0) = w * (out(r, 0) - (1.0 - l));
      delta(r, 1) = w * (out(r, 1) - l);
    }
  } else {
    const auto& mse = std::get<MeanSquaredError>(loss);
    for (std::size_t r = 0; r < batch; ++r) {
      delta(r, 0) = 2.0 * (out(r, 0) - mse.targets[r]) * inv_batch;
    }
  }

  for (std::size_t l = m.layers().size(); l-- > 0;) {
    const auto& layer = m.layers()[l];
    const Matrix& input = acts[l];
    const std::size_t n_in = layer.input_dim();
    const std::size_t n_out = layer.output_dim();
    double* gw = result.grads.weights[l].data().data();
    auto& gb = result.grads.bias[l];

    for (std::size_t r = 0; r < batch; ++r) {
      const double* a = input.row(r).data();
      const double* d = delta.row(r).data();
      for (std::size_t j = 0; j < n_out; ++j) gb[j] += d[j];
      for (std::size_t k = 0; k < n_in; ++k) {
        const double ak = a[k];
        if (ak == 0.0) continue;
        double* gwk = gw + k * n_out;
        for (std::size_t j = 0; j < n_out; ++j) gwk[j] += ak * d[j];
      }
    }

    if (l == 0) break;
    const Activation below = m.layers()[l - 1].activation;
    // next = delta * W^T via axpy over rows of W^T, then the ReLU mask.
    Matrix transposed(n_out, n_in);
    for (std::size_t k = 0; k < n_in; ++k)
      for (std::size_t j = 0; j < n_out; ++j) transposed(j, k) = layer.weights(k, j);
    Matrix next(batch, n_in);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* a = input.row(r).data();
      const double* d = delta.row(r).data();
      double* nd = next.row(r).data();
      for (std::size_t j = 0; j < n_out; ++j) {
        const double dj = d[j];
        if (dj == 0.0) continue;
        const double* wt = transposed.row(j).data();
        for (std::size_t k = 0; k < n_in; ++k) nd[k] += dj * wt[k];
      }
      if (below == Activation::relu) {
        for (std::size_t k = 0; k < n_in; ++k) {
          if (a[k] <= 0.0) nd[k] = 0.0;
        }
      }
    }
    delta = std::move(next);
  }
  return result;
}

}  // namespace orars
