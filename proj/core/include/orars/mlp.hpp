#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "orars/matrix.hpp"

namespace orars {

enum class Activation { relu, softmax, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

struct DenseLayer {
  Matrix weights;              // (in, out)
  std::vector<double> bias;    // out
  Activation activation = Activation::identity;

  std::size_t input_dim() const { return weights.rows(); }
  std::size_t output_dim() const { return weights.cols(); }
};

class MlpModel {
 public:
  MlpModel() = default;
  // Checks that shapes compose, softmax appears only last, and parameters are finite.
  explicit MlpModel(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().input_dim(); }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().output_dim(); }
  std::size_t parameter_count() const;

  void check_finite() const;

 private:
  std::vector<DenseLayer> layers_;
};

// Hidden layers use ReLU; weights drawn uniform in +-sqrt(6 / fan_in), biases zero.
MlpModel make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                  std::size_t output_dim, Activation output_activation, std::uint64_t seed);

// Hidden widths of both the pairwise classifier and the regressor.
inline constexpr std::size_t kDefaultHidden[] = {128, 256, 128};

// Rows of `x` are samples. Every output row depends only on its input row, with a
// fixed accumulation order, so batching never changes a result.
Matrix forward(const MlpModel& m, const Matrix& x);

// Probability clamp applied before taking logs.
inline constexpr double kLogClamp = 1e-12;

double weighted_xent_loss(double p0, double p1, int label, double weight);
double pair_weight(double score_i, double score_j);
double mse_loss(double prediction, double target);

// Per-sample targets for the two supported objectives.
struct WeightedCrossEntropy {
  std::vector<int> labels;      // {0,1}
  std::vector<double> weights;  // [0,1]
};
struct MeanSquaredError {
  std::vector<double> targets;
};
using LossSpec = std::variant<WeightedCrossEntropy, MeanSquaredError>;

// Mean per-sample loss over a batch.
double batch_loss(const MlpModel& m, const Matrix& x, const LossSpec& loss);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const MlpModel& m);
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

// Analytic gradients of the mean per-sample loss. The cross-entropy objective needs a
// two-unit softmax head; the MSE objective needs a single identity output.
LossAndGradients backward(const MlpModel& m, const Matrix& x, const LossSpec& loss);

}  // namespace orars
