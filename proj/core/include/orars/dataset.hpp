#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orars/matrix.hpp"

namespace orars {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr double kMinScore = 0.0;
inline constexpr double kMaxScore = 5.0;
// Zero probabilities are floored at this value before taking the log.
inline constexpr double kProbabilityFloor = 1e-10;
inline constexpr int kDefaultRankCount = 21;

struct Utterance {
  std::string id;
  Matrix log_ppg;                  // (T, C), natural log posteriors
  std::vector<int> alignment;      // length T, values in [0, C)
  std::optional<double> score;     // mean rater score in [0, 5]
  std::optional<std::vector<double>> rater_scores;

  std::size_t frames() const { return log_ppg.rows(); }
  std::size_t phonemes() const { return log_ppg.cols(); }
};

// Throws ValidationError naming the utterance and the failed invariant.
void validate_utterance(const Utterance& u);

struct AlignmentMatrix {
  Matrix one_hot;  // (T, C), exactly one 1 per row
};

AlignmentMatrix alignment_to_matrix(std::span<const int> alignment, std::size_t phoneme_count);

class Dataset {
 public:
  Dataset() = default;
  // Validates every utterance, shared phoneme count, and id uniqueness.
  Dataset(std::vector<Utterance> utterances, std::size_t phoneme_count);

  const std::vector<Utterance>& utterances() const { return utterances_; }
  std::size_t phoneme_count() const { return phoneme_count_; }
  std::size_t size() const { return utterances_.size(); }
  bool empty() const { return utterances_.empty(); }
  const Utterance& operator[](std::size_t i) const { return utterances_[i]; }

  // Subset by position, preserving the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

  // Scores in dataset order; throws ValidationError on an unscored utterance.
  std::vector<double> scores() const;

 private:
  std::vector<Utterance> utterances_;
  std::size_t phoneme_count_ = 0;
};

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

// Rank in [1, M] for a score in [0, 5]: 1 + floor(score / 5 * (M - 1) + 0.5), clamped.
int score_to_rank(double score, int rank_count);
// Representative score of a rank, the inverse of score_to_rank on the grid.
double rank_to_score(int rank, int rank_count);

std::map<std::string, int> discretize_scores(const Dataset& d, int rank_count);

struct AnchorSplit {
  Dataset anchors;   // N utterances per occupied rank
  Dataset training;  // everything else
  std::map<std::string, int> ranks;  // rank of every utterance in the input
};

AnchorSplit split_anchor_set(const Dataset& d, int rank_count, int per_rank, std::uint64_t seed);

}  // namespace orars
