#pragma once

#include <cmath>
#include <string_view>

namespace nmn::core {

enum class Activation { Identity, SReLU, ReLU, Sigmoid, Tanh };

/// sReLU is min(1, max(-1, x)); its derivative is taken as 1 on the closed
/// interval [-1, 1].
double activation_apply(double x, Activation kind);

/// Derivative expressed through the pre-activation value.
double activation_derivative(double pre, Activation kind);

std::string_view activation_name(Activation kind);

/// Throws ConfigError for unknown names.
Activation parse_activation(std::string_view name);

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace nmn::core
