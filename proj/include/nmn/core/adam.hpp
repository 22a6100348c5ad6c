#pragma once

#include <cstddef>

#include "nmn/core/parameter_store.hpp"

namespace nmn::core {

struct AdamConfig {
  double omega1 = 0.9;
  double omega2 = 0.999;
  double epsilon = 1e-8;
};

/// One Adam step with the bias correction folded into the learning rate:
///   z <- w1 z + (1 - w1) g,  v <- w2 v + (1 - w2) g*g,
///   lr = base_lr * sqrt(1 - w2^step) / (1 - w1^step),
///   param <- param - lr * z / (sqrt(v) + eps).
/// step_index is 1-based. Enables moments on first use. Returns the
/// effective learning rate.
double adam_step(ParameterStore& store, const GradientSet& grads, double base_lr,
                 std::size_t step_index, const AdamConfig& cfg);

}  // namespace nmn::core
