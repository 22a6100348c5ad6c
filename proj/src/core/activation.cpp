#include "nmn/core/activation.hpp"

#include <algorithm>
#include <string>

#include "nmn/core/errors.hpp"

namespace nmn::core {

double activation_apply(double x, Activation kind) {
  switch (kind) {
    case Activation::Identity:
      return x;
    case Activation::SReLU:
      return std::min(1.0, std::max(-1.0, x));
    case Activation::ReLU:
      return x > 0.0 ? x : 0.0;
    case Activation::Sigmoid:
      return sigmoid(x);
    case Activation::Tanh:
      return std::tanh(x);
  }
  throw ConfigError("unknown activation kind");
}

double activation_derivative(double pre, Activation kind) {
  switch (kind) {
    case Activation::Identity:
      return 1.0;
    case Activation::SReLU:
      return (pre >= -1.0 && pre <= 1.0) ? 1.0 : 0.0;
    case Activation::ReLU:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = sigmoid(pre);
      return s * (1.0 - s);
    }
    case Activation::Tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  throw ConfigError("unknown activation kind");
}

std::string_view activation_name(Activation kind) {
  switch (kind) {
    case Activation::Identity:
      return "identity";
    case Activation::SReLU:
      return "srelu";
    case Activation::ReLU:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Tanh:
      return "tanh";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "srelu") return Activation::SReLU;
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation kind '" + std::string(name) + "'");
}

}  // namespace nmn::core
