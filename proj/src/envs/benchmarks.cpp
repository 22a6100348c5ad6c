#include "nmn/envs/benchmarks.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"

namespace nmn::envs {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void check_task(const TaskSample& task, std::size_t n) {
  if (task.alpha.size() != n) {
    throw DimensionError(fmt::format("benchmark {} task needs {} alpha components, got {}",
                                     task.benchmark, n, task.alpha.size()));
  }
}

void observe(EnvState& s, const TaskSample& task) {
  switch (task.benchmark) {
    case 1:
      s.obs.assign({s.p + task.alpha[0]});
      break;
    case 2:
      s.obs.assign({task.alpha[0] - s.ux, task.alpha[1] - s.uy});
      break;
    default:
      s.obs.assign(
          {task.alpha[0] - s.ux, task.alpha[1] - s.uy, task.alpha[2] - s.ux, task.alpha[3] - s.uy});
      break;
  }
}

double sq_dist(double ux, double uy, double cx, double cy) {
  const double dx = ux - cx;
  const double dy = uy - cy;
  return dx * dx + dy * dy;
}

}  // namespace

std::size_t obs_dim(int benchmark) {
  switch (benchmark) {
    case 1:
      return 1;
    case 2:
      return 2;
    case 3:
      return 4;
    default:
      throw ConfigError(fmt::format("unknown benchmark {} (expected 1, 2 or 3)", benchmark));
  }
}

models::ActionBounds action_bounds(int benchmark) {
  if (benchmark == 1) {
    return {-20.0, 20.0};
  }
  obs_dim(benchmark);
  const double inf = std::numeric_limits<double>::infinity();
  return {-inf, inf};
}

Rng episode_rng(std::uint64_t master_seed, std::uint64_t batch, std::uint64_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32)};
  return Rng(seq);
}

TaskSample sample_task(int benchmark, Rng& rng, const EnvOptions& opts) {
  TaskSample t;
  t.benchmark = benchmark;
  switch (benchmark) {
    case 1:
      t.alpha = {uniform(rng, -opts.alpha_max, opts.alpha_max)};
      break;
    case 2: {
      const double a1 = uniform(rng, -1.0, 1.0);
      const double a2 = uniform(rng, -1.0, 1.0);
      t.alpha = {a1, a2, uniform(rng, -kPi, kPi)};
      break;
    }
    case 3: {
      t.alpha.resize(5);
      for (int i = 0; i < 4; ++i) {
        t.alpha[i] = uniform(rng, -1.0, 1.0);
      }
      t.alpha[4] = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
      break;
    }
    default:
      throw ConfigError(fmt::format("unknown benchmark {} (expected 1, 2 or 3)", benchmark));
  }
  return t;
}

EnvState reset(const TaskSample& task, Rng& rng, const EnvOptions& opts) {
  EnvState s;
  s.benchmark = task.benchmark;
  switch (task.benchmark) {
    case 1:
      check_task(task, 1);
      s.p = uniform(rng, -5.0 - task.alpha[0], 5.0 - task.alpha[0]);
      break;
    case 2: {
      check_task(task, 3);
      const double half = opts.bench2_initial_times_pi ? kStartHalf * kPi : kStartHalf;
      s.ux = uniform(rng, -half, half);
      s.uy = uniform(rng, -half, half);
      break;
    }
    case 3:
      check_task(task, 5);
      s.ux = uniform(rng, -kStartHalf, kStartHalf);
      s.uy = uniform(rng, -kStartHalf, kStartHalf);
      break;
    default:
      throw ConfigError(fmt::format("unknown benchmark {} (expected 1, 2 or 3)", task.benchmark));
  }
  observe(s, task);
  return s;
}

double wrap(double u) {
  if (u > kArenaHalf) {
    return u - 2.0 * kArenaHalf;
  }
  if (u < -kArenaHalf) {
    return u + 2.0 * kArenaHalf;
  }
  return u;
}

double bench1_step(EnvState& s, double action, const TaskSample& task, Rng& rng) {
  const double diff = std::abs(action - s.p);
  double reward = 0.0;
  if (diff < 1.0) {
    reward = 10.0;
    s.p = uniform(rng, -5.0 - task.alpha[0], 5.0 - task.alpha[0]);
  } else {
    reward = -diff;
  }
  s.obs[0] = s.p + task.alpha[0];
  return reward;
}

double bench2_step(EnvState& s, double action, const TaskSample& task, Rng& rng,
                   const EnvOptions& opts) {
  double reward = opts.bench2_step_reward;
  if (sq_dist(s.ux, s.uy, task.alpha[0], task.alpha[1]) <= kTargetRadius * kTargetRadius) {
    reward = 100.0;
    s.ux = uniform(rng, -kStartHalf, kStartHalf);
    s.uy = uniform(rng, -kStartHalf, kStartHalf);
  } else {
    const double n = uniform(rng, -kPi / 4.0, kPi / 4.0);
    const double wind = task.alpha[2] + n;
    s.ux = wrap(s.ux + 0.25 * (std::sin(action) + std::sin(wind)));
    s.uy = wrap(s.uy + 0.25 * (std::cos(action) + std::cos(wind)));
  }
  s.obs[0] = task.alpha[0] - s.ux;
  s.obs[1] = task.alpha[1] - s.uy;
  return reward;
}

double bench3_reward(double ux, double uy, const TaskSample& task, const EnvOptions& opts) {
  const double r2 = kTargetRadius * kTargetRadius;
  const double d1 = sq_dist(ux, uy, task.alpha[0], task.alpha[1]);
  const double d2 = sq_dist(ux, uy, task.alpha[2], task.alpha[3]);
  const bool in1 = d1 <= r2;
  const bool in2 = d2 <= r2;
  if (!in1 && !in2) {
    return 0.0;
  }
  // Inside both: the nearer centre wins, target 1 on a tie.
  const bool first = in1 && (!in2 || d1 <= d2);
  const double a5 = task.alpha[4];
  if (opts.bench3_literal_routing) {
    return first ? 100.0 * a5 : -50.0 * a5;
  }
  const bool positive = (a5 > 0.0) == first;
  return positive ? 100.0 : -50.0;
}

double bench3_step(EnvState& s, double action, const TaskSample& task, Rng& rng,
                   const EnvOptions& opts) {
  const double reward = bench3_reward(s.ux, s.uy, task, opts);
  if (reward != 0.0) {
    s.ux = uniform(rng, -kStartHalf, kStartHalf);
    s.uy = uniform(rng, -kStartHalf, kStartHalf);
  } else {
    s.ux = wrap(s.ux + 0.25 * std::sin(action * kPi));
    s.uy = wrap(s.uy + 0.25 * std::cos(action * kPi));
  }
  s.obs[0] = task.alpha[0] - s.ux;
  s.obs[1] = task.alpha[1] - s.uy;
  s.obs[2] = task.alpha[2] - s.ux;
  s.obs[3] = task.alpha[3] - s.uy;
  return reward;
}

double env_step(EnvState& state, double action, const TaskSample& task, Rng& rng,
                const EnvOptions& opts) {
  switch (task.benchmark) {
    case 1:
      return bench1_step(state, action, task, rng);
    case 2:
      return bench2_step(state, action, task, rng, opts);
    case 3:
      return bench3_step(state, action, task, rng, opts);
    default:
      throw ConfigError(fmt::format("unknown benchmark {} (expected 1, 2 or 3)", task.benchmark));
  }
}

}  // namespace nmn::envs
