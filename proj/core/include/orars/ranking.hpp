#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "orars/dataset.hpp"
#include "orars/features.hpp"
#include "orars/matrix.hpp"
#include "orars/mlp.hpp"
#include "orars/train_config.hpp"

namespace orars {

// Feature rows with their human scores, row-aligned.
struct LabeledFeatures {
  Matrix features;
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
  LabeledFeatures subset(std::span<const std::size_t> indices) const;
};

LabeledFeatures labeled_features(const Dataset& d, AgopMode mode = AgopMode::diagonal);

struct ScoredPair {
  std::vector<double> z;  // [f_i, f_j]
  int label = 0;          // 1 iff y_i > y_j
  double weight = 0.0;    // min(|y_i - y_j|, 1)
};

ScoredPair make_pair(std::span<const double> features_i, double score_i,
                     std::span<const double> features_j, double score_j);

// Deterministic seeded split of n items into (training, validation) positions. The
// validation part holds round(fraction * n) items, at least one and at most n - 1.
struct TrainValidationSplit {
  std::vector<std::size_t> training;
  std::vector<std::size_t> validation;
};
TrainValidationSplit split_validation(std::size_t n, double fraction, std::uint64_t seed);

struct TrainingTrace {
  std::vector<double> training_loss;    // mean minibatch loss per epoch
  std::vector<double> validation_loss;  // per epoch
  std::size_t best_epoch = 0;           // 0-based argmin of validation_loss, earliest on ties
};

struct TrainedModel {
  MlpModel model;
  TrainingTrace trace;
};

// Pairwise classifier: input [f_i, f_j], 128/256/128 ReLU, 2-unit softmax whose second
// output estimates P(y_i > y_j). Returns the epoch with the smallest validation loss.
TrainedModel train_classifier(const LabeledFeatures& train, const LabeledFeatures& validation,
                              const TrainConfig& cfg);
// Holds out cfg.validation_fraction of `train` for model selection.
TrainedModel train_classifier(const Dataset& train, const TrainConfig& cfg,
                              AgopMode mode = AgopMode::diagonal);

// Second softmax output for every row [x_t, reference_i].
std::vector<double> comparison_probabilities(const MlpModel& classifier,
                                             std::span<const double> test_features,
                                             const Matrix& reference_features);

struct RankPrediction {
  double k = 1.0;
  double predicted_score = 0.0;
  std::vector<double> comparison_probs;
};

// k = sum(p) + 1; score is the floor(k)-th smallest reference score, floor(k) clamped to [1, N].
RankPrediction rank_placement_from_probs(std::vector<double> probs,
                                         std::span<const double> reference_scores);

RankPrediction score_rank_placement(const MlpModel& classifier, const LabeledFeatures& reference,
                                    std::span<const double> test_features);

struct AnchorPrediction {
  double value = 0.0;         // sum(p) / N, in [0, M]
  double predicted_score = 0.0;
  std::vector<double> comparison_probs;
};

// Anchor set with its discretized ranks; must hold exactly N members for each rank present.
struct AnchorSet {
  LabeledFeatures samples;
  std::vector<int> ranks;
  int per_rank = 1;
  int rank_count = kDefaultRankCount;

  // Throws ValidationError unless balanced.
  void validate() const;
  // Distinct ranks present, ascending; their count is M.
  std::vector<int> occupied_ranks() const;
};

AnchorSet make_anchor_set(const Dataset& anchors, int rank_count, int per_rank,
                          AgopMode mode = AgopMode::diagonal);

double anchor_value_from_probs(std::span<const double> probs, int per_rank);

// Maps an anchor value v in [0, M] onto the 0-5 scale by linear interpolation between
// the representative scores of the occupied ranks at positions v - 0.5.
double anchor_value_to_score(double value, std::span<const int> occupied_ranks, int rank_count);

// p_i = P(y_i^a < y_t), evaluated as the classifier's P(y_t > y_i^a) on [x_t, x_i^a].
AnchorPrediction score_anchor_set(const MlpModel& classifier, const AnchorSet& anchors,
                                  std::span<const double> test_features);

// Regressor: input f(x), 128/256/128 ReLU, one identity output, MSE loss.
TrainedModel train_nnr(const LabeledFeatures& train, const LabeledFeatures& validation,
                       const TrainConfig& cfg);
TrainedModel train_nnr(const Dataset& train, const TrainConfig& cfg,
                       AgopMode mode = AgopMode::diagonal);

struct RegressorPrediction {
  double raw = 0.0;
  double reported = 0.0;  // raw clamped to [0, 5]
};

RegressorPrediction predict_nnr(const MlpModel& regressor, std::span<const double> features);

}  // namespace orars
