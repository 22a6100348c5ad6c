#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nmn/core/activation.hpp"

namespace nmn::models {

enum class Variant { NMN, RNN };

/// Which activation the main network's hidden layers use. Default keeps the
/// per-benchmark kinds (sReLU for benchmark 1 NMN, ReLU elsewhere); SReLU and
/// Sigmoid force every hidden main-network layer to that kind.
enum class ActivationFamily { Default, SReLU, Sigmoid };

enum class Head { Actor, Critic };

struct ModelConfig {
  int benchmark = 1;
  Variant variant = Variant::NMN;
  ActivationFamily family = ActivationFamily::Default;
  int depth_override = -1;  // hidden layers in the main network; -1 keeps the default
  Head head = Head::Actor;
};

/// Benchmark-dependent input sizes. The action space is one-dimensional for
/// all three benchmarks.
struct IoDims {
  std::size_t obs = 0;
  std::size_t action = 1;
  [[nodiscard]] std::size_t feedback() const { return obs + action + 1; }
};

IoDims io_dims(int benchmark);

struct LayerSpec {
  enum class Kind { Gru, Dense, Neuromod } kind = Kind::Dense;
  std::size_t width = 0;
  core::Activation act = core::Activation::Identity;
};

/// Layer plan before parameters exist. For NMN, `history` is the
/// neuromodulatory network (its last width is k = |z|) and `main` is the
/// modulated chain fed by x_t. For RNN, `history` consumes [feedback, x_t]
/// and `main` continues the same stack with plain dense layers.
struct ArchitecturePlan {
  ModelConfig config;
  IoDims dims;
  std::size_t output_width = 0;
  std::vector<LayerSpec> history;
  std::vector<LayerSpec> main;
};

/// Throws ConfigError for an unknown benchmark, a depth override outside
/// {-1, 0, 1, 4} or any other invalid combination.
ArchitecturePlan plan_architecture(const ModelConfig& config);

/// Exact trainable-parameter count of a plan, without allocating it.
std::size_t count_parameters(const ArchitecturePlan& plan);

/// Compact description, e.g. "GRU50 -> relu20 -o (srelu10 -> I2)".
std::string describe(const ArchitecturePlan& plan);

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);
std::string_view family_name(ActivationFamily f);
ActivationFamily parse_family(std::string_view s);

}  // namespace nmn::models
