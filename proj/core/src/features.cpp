#include "orars/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "orars/error.hpp"

namespace orars {

AgopMode parse_agop_mode(std::string_view name) {
  if (name == "diagonal") return AgopMode::diagonal;
  if (name == "literal") return AgopMode::literal;
  throw ConfigError("unknown agop mode '" + std::string(name) + "' (expected diagonal|literal)");
}

std::string_view to_string(AgopMode mode) {
  return mode == AgopMode::diagonal ? "diagonal" : "literal";
}

std::vector<double> compute_agop(const Utterance& u, AgopMode mode) {
  const std::size_t C = u.phonemes();
  std::vector<double> numerator(C, 0.0);
  std::vector<double> occupancy(C, 0.0);
  for (std::size_t t = 0; t < u.frames(); ++t) {
    const auto target = static_cast<std::size_t>(u.alignment[t]);
    const auto row = u.log_ppg.row(t);
    occupancy[target] += 1.0;
    if (mode == AgopMode::diagonal) {
      numerator[target] += row[target];
    } else {
      double frame_sum = 0.0;
      for (const double v : row) frame_sum += v;
      numerator[target] += frame_sum;
    }
  }
  std::vector<double> v(C);
  for (std::size_t c = 0; c < C; ++c) v[c] = numerator[c] / (occupancy[c] + kAgopEpsilon);
  return v;
}

std::vector<double> compute_cgop(const Utterance& u) {
  const std::size_t T = u.frames();
  const std::size_t C = u.phonemes();
  const std::size_t width = C - 1;

  // Welford accumulation per sorted-competitor column.
  std::vector<double> mean(width, 0.0);
  std::vector<double> m2(width, 0.0);
  std::vector<double> competitors(width);
  for (std::size_t t = 0; t < T; ++t) {
    const auto target = static_cast<std::size_t>(u.alignment[t]);
    const auto row = u.log_ppg.row(t);
    std::size_t j = 0;
    for (std::size_t c = 0; c < C; ++c) {
      if (c != target) competitors[j++] = row[c];
    }
    std::sort(competitors.begin(), competitors.end(), std::greater<>());
    const double n = static_cast<double>(t + 1);
    for (std::size_t k = 0; k < width; ++k) {
      const double delta = competitors[k] - mean[k];
      mean[k] += delta / n;
      m2[k] += delta * (competitors[k] - mean[k]);
    }
  }

  std::vector<double> out(2 * width);
  for (std::size_t k = 0; k < width; ++k) {
    out[k] = mean[k];
    out[width + k] = T > 1 ? std::sqrt(std::max(0.0, m2[k] / static_cast<double>(T))) : 0.0;
  }
  return out;
}

FeatureVector extract_features(const Utterance& u, AgopMode mode) {
  FeatureVector f{compute_agop(u, mode), compute_cgop(u), {}};
  f.combined.reserve(f.agop.size() + f.cgop.size());
  f.combined.insert(f.combined.end(), f.agop.begin(), f.agop.end());
  f.combined.insert(f.combined.end(), f.cgop.begin(), f.cgop.end());
  return f;
}

double classic_gop_sentence_score(const Utterance& u) {
  const std::size_t C = u.phonemes();
  std::vector<double> sum(C, 0.0);
  std::vector<std::size_t> count(C, 0);
  for (std::size_t t = 0; t < u.frames(); ++t) {
    const auto target = static_cast<std::size_t>(u.alignment[t]);
    sum[target] += u.log_ppg(t, target);
    ++count[target];
  }
  double total = 0.0;
  std::size_t occupied = 0;
  for (std::size_t c = 0; c < C; ++c) {
    if (count[c] == 0) continue;
    total += sum[c] / static_cast<double>(count[c]);
    ++occupied;
  }
  return total / static_cast<double>(occupied);
}

Matrix feature_matrix(const Dataset& d, AgopMode mode) {
  Matrix m(d.size(), d.empty() ? 0 : feature_dimension(d.phoneme_count()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto f = extract_features(d[i], mode);
    std::copy(f.combined.begin(), f.combined.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace orars
