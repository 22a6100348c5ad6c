#include "nmn/trainer/advantage.hpp"

#include <cmath>
#include <cstdio>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"
#include "nmn/trainer/hyperparams.hpp"

namespace nmn::trainer {

void HyperParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("hyper-parameters: " + what); };
  if (B < 1) fail("B must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) fail("lambda must lie in (0, 1]");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(beta_min > 0.0 && beta_min <= beta0 && beta0 <= beta_max)) {
    fail("need 0 < beta_min <= beta0 <= beta_max");
  }
  if (!(d_targ > 0.0)) fail("d_targ must be positive");
  if (!(d_thresh > 0.0)) fail("d_thresh must be positive");
  if (!(a_lr0 > 0.0) || !(c_lr > 0.0)) fail("learning rates must be positive");
  if (!(omega1 > 0.0 && omega1 < 1.0 && omega2 > 0.0 && omega2 < 1.0)) {
    fail("omega1 and omega2 must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (e_actor < 1 || e_critic < 1) fail("epoch counts must be >= 1");
  if (cmb < 1) fail("cmb must be >= 1");
  if (T < 1) fail("T must be >= 1");
  if (eta < 0.0) fail("eta must be non-negative");
  if (L < 1 || L_prime < 1 || L_prime > L) fail("need 1 <= L' <= L");
  if (E < B) fail("episode budget E must be >= B");
}

AdaptiveState initial_adaptive_state(const HyperParams& hp) {
  return {hp.beta0, hp.a_lr0, 0};
}

std::vector<double> compute_td(std::span<const double> rewards, std::span<const double> values,
                               double gamma) {
  if (values.size() != rewards.size() + 1) {
    throw DimensionError(fmt::format("compute_td: need {} values for {} rewards, got {}",
                                     rewards.size() + 1, rewards.size(), values.size()));
  }
  std::vector<double> td(rewards.size());
  for (std::size_t j = 0; j < rewards.size(); ++j) {
    td[j] = (1.0 - gamma) * rewards[j] + gamma * values[j + 1] - values[j];
  }
  return td;
}

std::vector<double> compute_gae(std::span<const double> td, double gamma, double lambda) {
  std::vector<double> gae(td.size());
  double acc = 0.0;
  for (std::size_t j = td.size(); j-- > 0;) {
    acc = td[j] + gamma * lambda * acc;
    gae[j] = acc;
  }
  return gae;
}

std::vector<double> critic_targets(std::span<const double> rewards, double gamma) {
  std::vector<double> d(rewards.size());
  double acc = 0.0;
  for (std::size_t j = rewards.size(); j-- > 0;) {
    acc = (1.0 - gamma) * rewards[j] + gamma * acc;
    d[j] = acc;
  }
  return d;
}

NormalizationStats normalize_advantages(std::vector<std::vector<double>>& batch,
                                        std::size_t prefix) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& seq : batch) {
    const std::size_t m = std::min(prefix, seq.size());
    for (std::size_t j = 0; j < m; ++j) {
      sum += seq[j];
    }
    n += m;
  }
  if (n == 0) {
    throw ContractError("normalize_advantages: empty batch");
  }
  NormalizationStats s;
  s.mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (const auto& seq : batch) {
    const std::size_t m = std::min(prefix, seq.size());
    for (std::size_t j = 0; j < m; ++j) {
      const double d = seq[j] - s.mean;
      sq += d * d;
    }
  }
  s.stddev = std::sqrt(sq / static_cast<double>(n));
  s.degenerate = !(s.stddev > 0.0);
  if (s.degenerate) {
    fmt::print(stderr, "warning: degenerate advantage batch (zero deviation); using zeros\n");
  }
  for (auto& seq : batch) {
    const std::size_t m = std::min(prefix, seq.size());
    for (std::size_t j = 0; j < m; ++j) {
      seq[j] = s.degenerate ? 0.0 : (seq[j] - s.mean) / s.stddev;
    }
  }
  return s;
}

}  // namespace nmn::trainer
