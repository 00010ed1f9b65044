#include "orars/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "orars/error.hpp"
#include "orars/seeding.hpp"

namespace orars {

namespace {

constexpr double kMinTargetPosterior = 0.02;
constexpr double kMaxTargetPosterior = 0.995;
constexpr std::size_t kMinSegment = 2;
constexpr std::size_t kMaxSegment = 6;

// Decay rate of the residual mass over sorted competitors; better speech concentrates
// its leftover mass on fewer competitors.
double confusion_concentration(double quality) { return 0.25 + 0.25 * quality; }

double round_to_quarter(double x) { return std::round(x * 4.0) / 4.0; }

}  // namespace

void SynthConfig::validate() const {
  if (n_utterances == 0) throw ConfigError("synth: n_utterances must be positive");
  if (phoneme_count < 2) throw ConfigError("synth: phoneme count must be >= 2");
  if (min_frames == 0 || min_frames > max_frames) throw ConfigError("synth: invalid frame range");
  if (!(quality_noise >= 0.0) || !(rater_noise >= 0.0)) {
    throw ConfigError("synth: noise levels must be non-negative");
  }
  if (n_raters == 0) throw ConfigError("synth: n_raters must be positive");
}

SyntheticCorpus generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t C = cfg.phoneme_count;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Per-phoneme difficulty shared by the whole corpus.
  std::vector<double> difficulty(C);
  for (double& d : difficulty) d = gauss(rng);

  SyntheticCorpus out;
  std::vector<Utterance> utterances;
  utterances.reserve(cfg.n_utterances);
  std::vector<double> competitor_logit(C - 1);
  std::vector<std::size_t> competitor_slot(C - 1);

  for (std::size_t n = 0; n < cfg.n_utterances; ++n) {
    const double q = 5.0 * unit(rng);
    const std::size_t T = std::uniform_int_distribution<std::size_t>(cfg.min_frames, cfg.max_frames)(rng);
    const double channel = gauss(rng);
    const double kappa = confusion_concentration(q);

    Utterance u;
    u.id = "synth-" + std::to_string(n);
    u.log_ppg = Matrix(T, C);
    u.alignment.reserve(T);
    int previous = -1;
    while (u.alignment.size() < T) {
      int phone = 0;
      do {
        phone = std::uniform_int_distribution<int>(0, static_cast<int>(C) - 1)(rng);
      } while (phone == previous);
      previous = phone;
      const std::size_t length = std::uniform_int_distribution<std::size_t>(kMinSegment, kMaxSegment)(rng);
      for (std::size_t k = 0; k < length && u.alignment.size() < T; ++k) u.alignment.push_back(phone);
    }

    for (std::size_t t = 0; t < T; ++t) {
      const auto target = static_cast<std::size_t>(u.alignment[t]);
      const double perturbation = difficulty[target] + channel + gauss(rng);
      const double pi = std::clamp(target_posterior(q) + cfg.quality_noise * perturbation,
                                   kMinTargetPosterior, kMaxTargetPosterior);

      // Residual mass over competitors in a random order, decaying geometrically.
      std::iota(competitor_slot.begin(), competitor_slot.end(), std::size_t{0});
      std::shuffle(competitor_slot.begin(), competitor_slot.end(), rng);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < C - 1; ++k) {
        competitor_logit[k] = -kappa * static_cast<double>(k) + cfg.quality_noise * gauss(rng);
        peak = std::max(peak, competitor_logit[k]);
      }
      double z = 0.0;
      for (const double l : competitor_logit) z += std::exp(l - peak);
      const double log_norm = peak + std::log(z);
      const double log_residual = std::log1p(-pi);

      auto row = u.log_ppg.row(t);
      row[target] = std::log(pi);
      for (std::size_t k = 0; k < C - 1; ++k) {
        std::size_t c = competitor_slot[k];
        if (c >= target) ++c;
        row[c] = log_residual + competitor_logit[k] - log_norm;
      }
    }

    std::vector<double> raters(cfg.n_raters);
    for (double& r : raters) {
      r = round_to_quarter(std::clamp(q + cfg.rater_noise * gauss(rng), kMinScore, kMaxScore));
    }
    u.score = std::accumulate(raters.begin(), raters.end(), 0.0) / static_cast<double>(raters.size());
    u.rater_scores = std::move(raters);

    utterances.push_back(std::move(u));
    out.quality.push_back(q);
  }
  out.dataset = Dataset(std::move(utterances), C);
  return out;
}

Dataset generate_corpus(const SynthConfig& cfg) { return generate_synthetic(cfg).dataset; }

}  // namespace orars
