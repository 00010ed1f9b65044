#pragma once

#include <string_view>
#include <vector>

#include "orars/dataset.hpp"
#include "orars/matrix.hpp"

namespace orars {

// Guard in the aGOP denominator for phonemes with no aligned frames.
inline constexpr double kAgopEpsilon = 1e-6;

// How the aGOP numerator is read.
//   diagonal: per-phoneme sum of the aligned frames' own log posteriors (default).
//   literal:  column sums of X^T Y, i.e. every log posterior of each aligned frame.
enum class AgopMode { diagonal, literal };

AgopMode parse_agop_mode(std::string_view name);
std::string_view to_string(AgopMode mode);

struct FeatureVector {
  std::vector<double> agop;      // C
  std::vector<double> cgop;      // 2C - 2: means then standard deviations
  std::vector<double> combined;  // 3C - 2: [agop, cgop]
};

inline std::size_t feature_dimension(std::size_t phoneme_count) { return 3 * phoneme_count - 2; }

std::vector<double> compute_agop(const Utterance& u, AgopMode mode = AgopMode::diagonal);
std::vector<double> compute_cgop(const Utterance& u);
FeatureVector extract_features(const Utterance& u, AgopMode mode = AgopMode::diagonal);

// Mean over occupied phonemes of their average aligned log posterior.
double classic_gop_sentence_score(const Utterance& u);

// One combined feature row per utterance, in dataset order.
Matrix feature_matrix(const Dataset& d, AgopMode mode = AgopMode::diagonal);

}  // namespace orars
