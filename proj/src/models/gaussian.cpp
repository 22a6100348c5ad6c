#include "nmn/models/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nmn/core/errors.hpp"

namespace nmn::models {

double softplus(double x) {
  // log(1 + e^x) without overflow for large x or cancellation for very negative x.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

GaussianPolicyOutput gaussian_from_head(std::span<const double> head, double sigma_floor) {
  if (head.size() % 2 != 0 || head.empty()) {
    throw DimensionError("gaussian head: output width must be 2m with m >= 1");
  }
  const std::size_t m = head.size() / 2;
  GaussianPolicyOutput p;
  p.mu.assign(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(m));
  p.sigma.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    p.sigma[i] = softplus(head[m + i]) + sigma_floor;
  }
  return p;
}

double log_likelihood(const GaussianPolicyOutput& p, std::span<const double> action) {
  if (p.mu.size() != p.sigma.size() || action.size() != p.mu.size()) {
    throw DimensionError("log_likelihood: mu, sigma and action must have equal length");
  }
  double quad = 0.0;
  double logdet = 0.0;
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    if (!(p.sigma[i] > 0.0)) {
      throw DomainError("log_likelihood: sigma must be positive");
    }
    const double d = (action[i] - p.mu[i]) / p.sigma[i];
    quad += d * d;
    logdet += 2.0 * std::log(p.sigma[i]);
  }
  const double m = static_cast<double>(p.mu.size());
  return -0.5 * (logdet + quad + m * std::log(2.0 * std::numbers::pi));
}

SampledAction sample_action(const GaussianPolicyOutput& p, const ActionBounds& bounds,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledAction out;
  out.raw.resize(p.mu.size());
  out.action.resize(p.mu.size());
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    if (!(p.sigma[i] > 0.0)) {
      throw DomainError("sample_action: sigma must be positive");
    }
    out.raw[i] = p.mu[i] + p.sigma[i] * normal(rng);
    out.action[i] = std::clamp(out.raw[i], bounds.low, bounds.high);
  }
  return out;
}

double kl_diag_gaussian(const GaussianPolicyOutput& p, const GaussianPolicyOutput& q) {
  if (p.mu.size() != q.mu.size() || p.sigma.size() != q.sigma.size() ||
      p.mu.size() != p.sigma.size()) {
    throw DimensionError("kl_diag_gaussian: dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    const double vp = p.sigma[i] * p.sigma[i];
    const double vq = q.sigma[i] * q.sigma[i];
    const double dm = q.mu[i] - p.mu[i];
    kl += 0.5 * (vp / vq + dm * dm / vq - 1.0 + std::log(vq / vp));
  }
  return kl;
}

}  // namespace nmn::models
