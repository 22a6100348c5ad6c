#include "nmn/models/architecture.hpp"

#include <fmt/format.h>

#include "nmn/core/errors.hpp"

namespace nmn::models {

using core::Activation;
using Kind = LayerSpec::Kind;

IoDims io_dims(int benchmark) {
  switch (benchmark) {
    case 1:
      return {1, 1};
    case 2:
      return {2, 1};
    case 3:
      return {4, 1};
    default:
      throw ConfigError(fmt::format("unknown benchmark {} (expected 1, 2 or 3)", benchmark));
  }
}

namespace {

Activation hidden_kind(ActivationFamily family, Activation listed_kind) {
  switch (family) {
    case ActivationFamily::SReLU:
      return Activation::SReLU;
    case ActivationFamily::Sigmoid:
      return Activation::Sigmoid;
    case ActivationFamily::Default:
      break;
  }
  return listed_kind;
}

// Hidden widths of the main network, resized to `depth` by keeping the last
// layers and repeating the first width in front.
std::vector<std::size_t> resize_hidden(std::vector<std::size_t> widths, int depth) {
  if (depth < 0) {
    return widths;
  }
  const auto d = static_cast<std::size_t>(depth);
  if (d <= widths.size()) {
    return {widths.end() - static_cast<std::ptrdiff_t>(d), widths.end()};
  }
  std::vector<std::size_t> out(d - widths.size(), widths.front());
  out.insert(out.end(), widths.begin(), widths.end());
  return out;
}

}  // namespace

ArchitecturePlan plan_architecture(const ModelConfig& config) {
  ArchitecturePlan plan;
  plan.config = config;
  plan.dims = io_dims(config.benchmark);
  plan.output_width = config.head == Head::Actor ? 2 * plan.dims.action : 1;
  if (config.depth_override != -1 && config.depth_override != 0 && config.depth_override != 1 &&
      config.depth_override != 4) {
    throw ConfigError(
        fmt::format("depth_override must be one of -1, 0, 1, 4 (got {})", config.depth_override));
  }

  std::vector<std::size_t> gru_widths;
  std::size_t signal_width = 0;
  std::vector<std::size_t> hidden;
  Activation nmn_hidden_kind = Activation::ReLU;
  if (config.benchmark == 1) {
    gru_widths = {50};
    signal_width = 20;
    hidden = {10};
    nmn_hidden_kind = Activation::SReLU;
  } else {
    gru_widths = {100, 75};
    signal_width = 45;
    hidden = {30, 10};
    nmn_hidden_kind = Activation::ReLU;
  }
  hidden = resize_hidden(hidden, config.depth_override);

  for (const auto w : gru_widths) {
    plan.history.push_back({Kind::Gru, w, Activation::Tanh});
  }
  // The layer after the GRUs stays ReLU in both variants: for NMN it emits z.
  plan.history.push_back({Kind::Dense, signal_width, Activation::ReLU});

  if (config.variant == Variant::NMN) {
    const Activation act = hidden_kind(config.family, nmn_hidden_kind);
    for (const auto w : hidden) {
      plan.main.push_back({Kind::Neuromod, w, act});
    }
    plan.main.push_back({Kind::Neuromod, plan.output_width, Activation::Identity});
  } else {
    const Activation act = hidden_kind(config.family, Activation::ReLU);
    for (const auto w : hidden) {
      plan.main.push_back({Kind::Dense, w, act});
    }
    plan.main.push_back({Kind::Dense, plan.output_width, Activation::Identity});
  }
  return plan;
}

std::size_t count_parameters(const ArchitecturePlan& plan) {
  const bool nmn = plan.config.variant == Variant::NMN;
  std::size_t in = nmn ? plan.dims.feedback() : plan.dims.feedback() + plan.dims.obs;
  std::size_t total = 0;
  auto add = [&](const LayerSpec& s, std::size_t k) {
    switch (s.kind) {
      case Kind::Gru:
        total += 3 * s.width * (in + s.width + 1);
        break;
      case Kind::Dense:
        total += s.width * (in + 1);
        break;
      case Kind::Neuromod:
        total += s.width * (in + 2 * k);
        break;
    }
    in = s.width;
  };
  for (const auto& s : plan.history) {
    add(s, 0);
  }
  const std::size_t k = plan.history.back().width;
  if (nmn) {
    in = plan.dims.obs;
  }
  for (const auto& s : plan.main) {
    add(s, k);
  }
  return total;
}

std::string describe(const ArchitecturePlan& plan) {
  auto name = [](const LayerSpec& s) {
    if (s.kind == Kind::Gru) {
      return fmt::format("GRU{}", s.width);
    }
    const auto act = s.act == Activation::Identity ? std::string("I")
                                                   : std::string(core::activation_name(s.act));
    return fmt::format("{}{}", act, s.width);
  };
  std::string out;
  for (std::size_t i = 0; i < plan.history.size(); ++i) {
    out += (i ? " -> " : "") + name(plan.history[i]);
  }
  const bool nmn = plan.config.variant == Variant::NMN;
  out += nmn ? " -o (" : "";
  for (std::size_t i = 0; i < plan.main.size(); ++i) {
    out += (i || !nmn ? " -> " : "") + name(plan.main[i]);
  }
  out += nmn ? ")" : "";
  return out;
}

std::string_view variant_name(Variant v) { return v == Variant::NMN ? "nmn" : "rnn"; }

Variant parse_variant(std::string_view s) {
  if (s == "nmn" || s == "NMN") {
    return Variant::NMN;
  }
  if (s == "rnn" || s == "RNN") {
    return Variant::RNN;
  }
  throw ConfigError(fmt::format("unknown variant '{}' (expected nmn|rnn)", s));
}

std::string_view family_name(ActivationFamily f) {
  switch (f) {
    case ActivationFamily::Default:
      return "default";
    case ActivationFamily::SReLU:
      return "srelu";
    case ActivationFamily::Sigmoid:
      return "sigmoid";
  }
  return "default";
}

ActivationFamily parse_family(std::string_view s) {
  if (s == "default") {
    return ActivationFamily::Default;
  }
  if (s == "srelu") {
    return ActivationFamily::SReLU;
  }
  if (s == "sigmoid") {
    return ActivationFamily::Sigmoid;
  }
  throw ConfigError(fmt::format("unknown activation family '{}' (expected default|srelu|sigmoid)", s));
}

}  // namespace nmn::models
