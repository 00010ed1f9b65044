#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orars/dataset.hpp"
#include "orars/features.hpp"
#include "orars/metrics.hpp"
#include "orars/train_config.hpp"

namespace orars {

enum class Algorithm {
  gop_mean,      // classic GOP sentence score, no training
  nnr,           // feature regressor
  orars_rank,    // pairwise classifier + rank placement against the training portion
  orars_anchor,  // pairwise classifier + balanced anchor set
};

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a);

struct ExperimentConfig {
  std::filesystem::path dataset_path;
  Algorithm algorithm = Algorithm::orars_rank;
  std::size_t folds = 5;
  int rank_count = kDefaultRankCount;
  int per_rank = 1;
  // batch_size == 0 selects the algorithm default (1024 classifier, 4 regressor).
  TrainConfig train{.batch_size = 0};
  AgopMode agop_mode = AgopMode::diagonal;
  std::filesystem::path output_path;
  std::uint64_t seed = 0;
  bool stratify = false;
  // 0 defers to ORARS_THREADS, then to the hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
  TrainConfig resolved_train_config() const;
};

// Folds by seeded shuffle then round-robin; with `ranks`, the shuffled order is stably
// grouped by rank first so each fold receives a balanced share of every rank.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds,
                                                 std::uint64_t seed,
                                                 const std::vector<int>* ranks = nullptr);

struct FoldSplit {
  std::vector<std::size_t> test;
  std::vector<std::size_t> training;    // dataset positions used for fitting
  std::vector<std::size_t> validation;  // dataset positions used for model selection
};

// Deterministic per-fold partition; the validation part is shared by every algorithm.
std::vector<FoldSplit> make_fold_splits(const Dataset& d, const ExperimentConfig& cfg);

struct UtterancePrediction {
  std::string id;
  std::size_t fold = 0;
  double truth = 0.0;
  double predicted = 0.0;
};

struct CrossValidationResult {
  EvalReport report;
  std::vector<UtterancePrediction> predictions;  // dataset order
};

CrossValidationResult run_cross_validation(const Dataset& d, const ExperimentConfig& cfg);
CrossValidationResult run_cross_validation(const ExperimentConfig& cfg);

// Effective worker count: explicit request, else ORARS_THREADS, else hardware.
std::size_t worker_threads(std::size_t requested);

std::string format_cv_table(const CrossValidationResult& r, const ExperimentConfig& cfg);
std::string format_cv_json(const CrossValidationResult& r, const ExperimentConfig& cfg);

// Writes the JSON record to `path` and the table to `path` + ".txt".
void write_cv_report(const CrossValidationResult& r, const ExperimentConfig& cfg,
                     const std::filesystem::path& path);

}  // namespace orars
