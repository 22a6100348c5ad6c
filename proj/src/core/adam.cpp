#include "nmn/core/adam.hpp"

#include <cmath>

#include "nmn/core/errors.hpp"

namespace nmn::core {

double adam_step(ParameterStore& store, const GradientSet& grads, double base_lr,
                 std::size_t step_index, const AdamConfig& cfg) {
  if (step_index == 0) {
    throw ContractError("adam_step: step_index must be >= 1 (1 - omega1^0 = 0)");
  }
  if (!(cfg.omega1 > 0.0 && cfg.omega1 < 1.0 && cfg.omega2 > 0.0 && cfg.omega2 < 1.0)) {
    throw ContractError("adam_step: omega1 and omega2 must lie in (0, 1)");
  }
  if (!grads.aligned_with(store)) {
    throw DimensionError("adam_step: gradients are not aligned with the store");
  }
  store.enable_moments();
  const double t = static_cast<double>(step_index);
  const double lr =
      base_lr * std::sqrt(1.0 - std::pow(cfg.omega2, t)) / (1.0 - std::pow(cfg.omega1, t));
  for (std::size_t e = 0; e < store.size(); ++e) {
    auto& entry = store.entry(e);
    const double* g = grads[e].data();
    double* p = entry.value.data();
    double* z = entry.moment_z.data();
    double* v = entry.moment_v.data();
    const std::size_t n = entry.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = cfg.omega1 * z[i] + (1.0 - cfg.omega1) * g[i];
      v[i] = cfg.omega2 * v[i] + (1.0 - cfg.omega2) * g[i] * g[i];
      p[i] -= lr * z[i] / (std::sqrt(v[i]) + cfg.epsilon);
    }
  }
  return lr;
}

}  // namespace nmn::core
