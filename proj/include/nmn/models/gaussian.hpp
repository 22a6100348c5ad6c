#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace nmn::models {

/// Lower bound added to softplus when turning raw network outputs into sigma.
inline constexpr double kSigmaFloor = 1e-4;

struct GaussianPolicyOutput {
  std::vector<double> mu;
  std::vector<double> sigma;
};

struct ActionBounds {
  double low = -20.0;
  double high = 20.0;
};

double softplus(double x);

/// Splits a 2m-wide head output [mu, s_raw] into (mu, softplus(s_raw) + floor).
GaussianPolicyOutput gaussian_from_head(std::span<const double> head,
                                        double sigma_floor = kSigmaFloor);

/// Diagonal-Gaussian log density. Throws DomainError if any sigma <= 0.
double log_likelihood(const GaussianPolicyOutput& p, std::span<const double> action);

struct SampledAction {
  std::vector<double> action;  // clipped, the executed value
  std::vector<double> raw;     // unclipped draw
};

/// Draws raw ~ N(mu, diag(sigma^2)) and clips each component to `bounds`.
/// Pass unbounded limits (+-inf) for an angle-valued action.
SampledAction sample_action(const GaussianPolicyOutput& p, const ActionBounds& bounds,
                            std::mt19937_64& rng);

/// KL(p || q) for diagonal Gaussians. Throws DimensionError on size mismatch.
double kl_diag_gaussian(const GaussianPolicyOutput& p, const GaussianPolicyOutput& q);

}  // namespace nmn::models
