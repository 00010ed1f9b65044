#include "orars/ranking.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "orars/adam.hpp"
#include "orars/error.hpp"
#include "orars/seeding.hpp"

namespace orars {

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kSampleStream = 2, kValidationStream = 3 };

void check_labeled(const LabeledFeatures& d, const char* what) {
  if (d.features.rows() != d.scores.size()) {
    throw ShapeError(std::string(what) + ": feature rows and scores disagree");
  }
}

struct PairIndex {
  std::size_t i;
  std::size_t j;
};

std::vector<PairIndex> draw_pairs(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<PairIndex> pairs(count);
  for (auto& p : pairs) {
    p.i = pick(rng);
    p.j = pick(rng);
  }
  return pairs;
}

// Builds the classifier batch for pairs[begin, end).
void fill_pair_batch(const LabeledFeatures& d, std::span<const PairIndex> pairs, Matrix& z,
                     WeightedCrossEntropy& targets) {
  const std::size_t dim = d.features.cols();
  z = Matrix(pairs.size(), 2 * dim);
  targets.labels.resize(pairs.size());
  targets.weights.resize(pairs.size());
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto [i, j] = pairs[r];
    auto row = z.row(r);
    const auto fi = d.features.row(i);
    const auto fj = d.features.row(j);
    std::copy(fi.begin(), fi.end(), row.begin());
    std::copy(fj.begin(), fj.end(), row.begin() + static_cast<std::ptrdiff_t>(dim));
    const double yi = d.scores[i];
    const double yj = d.scores[j];
    targets.labels[r] = yi > yj ? 1 : 0;
    targets.weights[r] = pair_weight(yi, yj);
  }
}

// Runs `epochs` passes, keeping the parameters with the smallest validation loss.
template <typename RunEpoch, typename ValidationLoss>
TrainedModel optimise(MlpModel model, const TrainConfig& cfg, RunEpoch&& run_epoch,
                      ValidationLoss&& validation_loss) {
  AdamState adam = AdamState::for_model(model, AdamConfig{cfg.learning_rate});
  TrainedModel best{model, {}};
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    best.trace.training_loss.push_back(run_epoch(model, adam));
    const double v = validation_loss(model);
    best.trace.validation_loss.push_back(v);
    if (v < best_loss) {
      best_loss = v;
      best.model = model;
      best.trace.best_epoch = epoch;
    }
  }
  return best;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0, 1)");
  }
}

LabeledFeatures LabeledFeatures::subset(std::span<const std::size_t> indices) const {
  LabeledFeatures out{Matrix(indices.size(), features.cols()), {}};
  out.scores.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = features.row(indices[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.scores.push_back(scores[indices[r]]);
  }
  return out;
}

LabeledFeatures labeled_features(const Dataset& d, AgopMode mode) {
  return {feature_matrix(d, mode), d.scores()};
}

ScoredPair make_pair(std::span<const double> features_i, double score_i,
                     std::span<const double> features_j, double score_j) {
  if (features_i.size() != features_j.size()) {
    throw ShapeError("make_pair: feature dimensions differ (" + std::to_string(features_i.size()) +
                     " vs " + std::to_string(features_j.size()) + ")");
  }
  ScoredPair p;
  p.z.reserve(2 * features_i.size());
  p.z.insert(p.z.end(), features_i.begin(), features_i.end());
  p.z.insert(p.z.end(), features_j.begin(), features_j.end());
  p.label = score_i > score_j ? 1 : 0;
  p.weight = pair_weight(score_i, score_j);
  return p;
}

TrainValidationSplit split_validation(std::size_t n, double fraction, std::uint64_t seed) {
  if (n < 2) throw ConfigError("need at least 2 utterances to hold out a validation set");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  auto held_out = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  held_out = std::clamp<std::size_t>(held_out, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  TrainValidationSplit s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held_out));
  s.training.assign(order.begin() + static_cast<std::ptrdiff_t>(held_out), order.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.training.begin(), s.training.end());
  return s;
}

TrainedModel train_classifier(const LabeledFeatures& train, const LabeledFeatures& validation,
                              const TrainConfig& cfg) {
  cfg.validate();
  check_labeled(train, "training set");
  check_labeled(validation, "validation set");
  if (train.size() < 2) throw ConfigError("classifier training needs at least 2 utterances");
  if (std::set<double>(train.scores.begin(), train.scores.end()).size() < 2) {
    throw ConfigError("classifier training needs at least 2 distinct scores (no informative pairs)");
  }
  if (validation.size() == 0) throw ConfigError("classifier training needs a validation set");
  if (validation.features.cols() != train.features.cols()) {
    throw ShapeError("validation feature width differs from training");
  }

  const std::size_t dim = train.features.cols();
  MlpModel model = make_mlp(2 * dim, kDefaultHidden, 2, Activation::softmax,
                            derive_seed(cfg.seed, kInitStream));
  const std::size_t pairs_per_epoch =
      cfg.pairs_per_epoch ? cfg.pairs_per_epoch : kPairsPerUtterance * train.size();

  std::mt19937_64 validation_rng(derive_seed(cfg.seed, kValidationStream));
  const auto validation_pairs =
      draw_pairs(validation.size(), kPairsPerUtterance * validation.size(), validation_rng);
  Matrix validation_z;
  WeightedCrossEntropy validation_targets;
  fill_pair_batch(validation, validation_pairs, validation_z, validation_targets);
  const LossSpec validation_spec = validation_targets;

  std::mt19937_64 sample_rng(derive_seed(cfg.seed, kSampleStream));
  Matrix z;
  WeightedCrossEntropy targets;
  auto run_epoch = [&](MlpModel& m, AdamState& adam) {
    const auto pairs = draw_pairs(train.size(), pairs_per_epoch, sample_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < pairs.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, pairs.size());
      fill_pair_batch(train, std::span(pairs).subspan(begin, end - begin), z, targets);
      auto step = backward(m, z, LossSpec{targets});
      adam_step(m, adam, step.grads);
      loss_sum += step.loss;
      ++batches;
    }
    return loss_sum / static_cast<double>(batches);
  };
  auto validation_loss = [&](const MlpModel& m) {
    return batch_loss(m, validation_z, validation_spec);
  };
  return optimise(std::move(model), cfg, run_epoch, validation_loss);
}

TrainedModel train_classifier(const Dataset& train, const TrainConfig& cfg, AgopMode mode) {
  const auto all = labeled_features(train, mode);
  const auto split = split_validation(all.size(), cfg.validation_fraction,
                                      derive_seed(cfg.seed, kValidationStream));
  return train_classifier(all.subset(split.training), all.subset(split.validation), cfg);
}

std::vector<double> comparison_probabilities(const MlpModel& classifier,
                                             std::span<const double> test_features,
                                             const Matrix& reference_features) {
  const std::size_t dim = test_features.size();
  if (reference_features.cols() != dim) {
    throw ShapeError("reference feature width differs from the test feature width");
  }
  Matrix z(reference_features.rows(), 2 * dim);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    std::copy(test_features.begin(), test_features.end(), row.begin());
    const auto ref = reference_features.row(r);
    std::copy(ref.begin(), ref.end(), row.begin() + static_cast<std::ptrdiff_t>(dim));
  }
  const Matrix out = forward(classifier, z);
  std::vector<double> probs(out.rows());
  for (std::size_t r = 0; r < out.rows(); ++r) probs[r] = out(r, 1);
  return probs;
}

RankPrediction rank_placement_from_probs(std::vector<double> probs,
                                         std::span<const double> reference_scores) {
  if (reference_scores.empty()) throw ConfigError("rank placement needs a non-empty training set");
  if (probs.size() != reference_scores.size()) {
    throw ShapeError("one comparison probability per training sample is required");
  }
  double sum = 0.0;
  for (const double p : probs) sum += p;
  RankPrediction r;
  r.k = sum + 1.0;
  const auto n = static_cast<double>(reference_scores.size());
  const double rank = std::clamp(std::floor(r.k), 1.0, n);

  std::vector<double> sorted(reference_scores.begin(), reference_scores.end());
  std::sort(sorted.begin(), sorted.end());
  r.predicted_score = sorted[static_cast<std::size_t>(rank) - 1];
  r.comparison_probs = std::move(probs);
  return r;
}

RankPrediction score_rank_placement(const MlpModel& classifier, const LabeledFeatures& reference,
                                    std::span<const double> test_features) {
  check_labeled(reference, "training set");
  if (reference.size() == 0) throw ConfigError("rank placement needs a non-empty training set");
  return rank_placement_from_probs(
      comparison_probabilities(classifier, test_features, reference.features), reference.scores);
}

void AnchorSet::validate() const {
  check_labeled(samples, "anchor set");
  if (ranks.size() != samples.size()) throw ShapeError("anchor set: one rank per sample required");
  if (per_rank < 1) throw ConfigError("anchor set: N must be >= 1");
  if (samples.size() == 0) throw ValidationError("anchor set is empty");
  std::map<int, int> counts;
  for (const int r : ranks) {
    if (r < 1 || r > rank_count) throw ValidationError("anchor rank outside [1, M]");
    ++counts[r];
  }
  for (const auto& [rank, count] : counts) {
    if (count != per_rank) {
      throw ValidationError("unbalanced anchor set: rank " + std::to_string(rank) + " has " +
                            std::to_string(count) + " anchors, expected " +
                            std::to_string(per_rank));
    }
  }
}

std::vector<int> AnchorSet::occupied_ranks() const {
  std::set<int> s(ranks.begin(), ranks.end());
  return {s.begin(), s.end()};
}

AnchorSet make_anchor_set(const Dataset& anchors, int rank_count, int per_rank, AgopMode mode) {
  AnchorSet a{labeled_features(anchors, mode), {}, per_rank, rank_count};
  for (const double s : a.samples.scores) a.ranks.push_back(score_to_rank(s, rank_count));
  a.validate();
  return a;
}

double anchor_value_from_probs(std::span<const double> probs, int per_rank) {
  if (per_rank < 1) throw ConfigError("anchor set: N must be >= 1");
  double sum = 0.0;
  for (const double p : probs) sum += p;
  return sum / static_cast<double>(per_rank);
}

double anchor_value_to_score(double value, std::span<const int> occupied_ranks, int rank_count) {
  if (occupied_ranks.empty()) throw ConfigError("anchor set has no ranks");
  const double last = static_cast<double>(occupied_ranks.size() - 1);
  const double pos = std::clamp(value - 0.5, 0.0, last);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, occupied_ranks.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  const double s_lo = rank_to_score(occupied_ranks[lo], rank_count);
  const double s_hi = rank_to_score(occupied_ranks[hi], rank_count);
  return s_lo + frac * (s_hi - s_lo);
}

AnchorPrediction score_anchor_set(const MlpModel& classifier, const AnchorSet& anchors,
                                  std::span<const double> test_features) {
  anchors.validate();
  AnchorPrediction p;
  p.comparison_probs = comparison_probabilities(classifier, test_features, anchors.samples.features);
  p.value = anchor_value_from_probs(p.comparison_probs, anchors.per_rank);
  p.predicted_score = anchor_value_to_score(p.value, anchors.occupied_ranks(), anchors.rank_count);
  return p;
}

TrainedModel train_nnr(const LabeledFeatures& train, const LabeledFeatures& validation,
                       const TrainConfig& cfg) {
  cfg.validate();
  check_labeled(train, "training set");
  check_labeled(validation, "validation set");
  if (train.size() == 0) throw ConfigError("regressor training needs a non-empty dataset");
  if (validation.size() == 0) throw ConfigError("regressor training needs a validation set");

  const std::size_t dim = train.features.cols();
  MlpModel model = make_mlp(dim, kDefaultHidden, 1, Activation::identity,
                            derive_seed(cfg.seed, kInitStream));

  const LossSpec validation_spec = MeanSquaredError{validation.scores};
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, kSampleStream));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  auto run_epoch = [&](MlpModel& m, AdamState& adam) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      const auto batch = train.subset(std::span(order).subspan(begin, end - begin));
      auto step = backward(m, batch.features, LossSpec{MeanSquaredError{batch.scores}});
      adam_step(m, adam, step.grads);
      loss_sum += step.loss;
      ++batches;
    }
    return loss_sum / static_cast<double>(batches);
  };
  auto validation_loss = [&](const MlpModel& m) {
    return batch_loss(m, validation.features, validation_spec);
  };
  return optimise(std::move(model), cfg, run_epoch, validation_loss);
}

TrainedModel train_nnr(const Dataset& train, const TrainConfig& cfg, AgopMode mode) {
  const auto all = labeled_features(train, mode);
  const auto split = split_validation(all.size(), cfg.validation_fraction,
                                      derive_seed(cfg.seed, kValidationStream));
  return train_nnr(all.subset(split.training), all.subset(split.validation), cfg);
}

RegressorPrediction predict_nnr(const MlpModel& regressor, std::span<const double> features) {
  if (regressor.output_dim() != 1) throw ShapeError("regressor must have a single output");
  Matrix x(1, features.size());
  std::copy(features.begin(), features.end(), x.row(0).begin());
  const double raw = forward(regressor, x)(0, 0);
  return {raw, std::clamp(raw, kMinScore, kMaxScore)};
}

}  // namespace orars
