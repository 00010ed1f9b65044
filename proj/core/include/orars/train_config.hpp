#pragma once

#include <cstddef>
#include <cstdint>

namespace orars {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 1024;  // the regressor uses 4
  std::uint64_t seed = 0;
  double validation_fraction = 0.10;
  // Ordered pairs drawn per epoch; 0 selects 50 * |training set|.
  std::size_t pairs_per_epoch = 0;

  // Throws ConfigError unless all counts are positive and the fraction is in (0, 1).
  void validate() const;
};

inline constexpr std::size_t kClassifierBatchSize = 1024;
inline constexpr std::size_t kRegressorBatchSize = 4;
inline constexpr std::size_t kPairsPerUtterance = 50;

inline TrainConfig classifier_defaults() { return TrainConfig{}; }
inline TrainConfig regressor_defaults() {
  TrainConfig c;
  c.batch_size = kRegressorBatchSize;
  return c;
}

}  // namespace orars
