#pragma once

#include <cstdint>
#include <vector>

#include "orars/dataset.hpp"

namespace orars {

// Synthetic scored corpus whose posteriorgrams degrade with a latent quality q in [0, 5].
struct SynthConfig {
  std::size_t n_utterances = 500;
  std::size_t phoneme_count = 20;
  std::size_t min_frames = 20;
  std::size_t max_frames = 60;
  // Scale of the phoneme, utterance and frame perturbations of the target posterior.
  double quality_noise = 0.1;
  // Standard deviation of each rater around q.
  double rater_noise = 0.5;
  std::size_t n_raters = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticCorpus {
  Dataset dataset;
  std::vector<double> quality;  // latent q per utterance
};

SyntheticCorpus generate_synthetic(const SynthConfig& cfg);
Dataset generate_corpus(const SynthConfig& cfg);

// Noise-free aligned-phoneme posterior for quality q: 0.2 + 0.79 q / 5.
inline double target_posterior(double quality) { return 0.2 + 0.79 * quality / 5.0; }

}  // namespace orars
