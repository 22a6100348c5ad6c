#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nmn::trainer {

/// TD_j = (1 - gamma) r_j + gamma c(h_{j+1}) - c(h_j), j in [0, L).
/// `values` holds c(h_0) .. c(h_L). Throws DimensionError unless
/// values.size() == rewards.size() + 1.
std::vector<double> compute_td(std::span<const double> rewards, std::span<const double> values,
                               double gamma);

/// GAE_j = TD_j + gamma * lambda * GAE_{j+1}, GAE_L = 0.
std::vector<double> compute_gae(std::span<const double> td, double gamma, double lambda);

/// D_j = sum_{t >= j} gamma^(t-j) (1 - gamma) r_t, by backward recursion.
std::vector<double> critic_targets(std::span<const double> rewards, double gamma);

struct NormalizationStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  bool degenerate = false;
};

/// Normalises the first `prefix` entries of every sequence in place using the
/// pooled mean and population standard deviation of those entries. Entries
/// beyond the prefix are left untouched. A zero deviation yields zeros and a
/// warning on stderr. Throws ContractError on an empty batch.
NormalizationStats normalize_advantages(std::vector<std::vector<double>>& batch,
                                        std::size_t prefix);

/// Per-episode advantage terms for one update.
struct AdvantageBatch {
  std::vector<std::vector<double>> td;
  std::vector<std::vector<double>> gae;
  std::vector<std::vector<double>> gae_norm;
  std::vector<std::vector<double>> targets;
  NormalizationStats stats;
};

}  // namespace nmn::trainer
