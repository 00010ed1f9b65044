#pragma once

#include <cstdint>
#include <vector>

#include "orars/matrix.hpp"
#include "orars/mlp.hpp"

namespace orars {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_model(const MlpModel& m, AdamConfig config = {});
};

// One bias-corrected Adam update. Throws Error on a non-finite gradient or a shape
// mismatch; on error neither the model nor the state is modified.
void adam_step(MlpModel& m, AdamState& s, const Gradients& grads);

}  // namespace orars
