#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nmn/models/gaussian.hpp"

namespace nmn::envs {

using Rng = std::mt19937_64;

struct EnvOptions {
  double alpha_max = 10.0;            // benchmark 1 task range
  double bench2_step_reward = -2.0;   // reward for a step outside the target
  bool bench2_initial_times_pi = false;  // draw the start in U[-1.5 pi, 1.5 pi] instead of U[-1.5, 1.5]
  bool bench3_literal_routing = false;   // 100*a5 / -50*a5 instead of swapping +100/-50
};

inline constexpr double kTargetRadius = 0.4;
inline constexpr double kArenaHalf = 2.0;
inline constexpr double kStartHalf = 1.5;

/// alpha: [alpha] for benchmark 1, [a1, a2, a3] for benchmark 2,
/// [a1, a2, a3, a4, a5] for benchmark 3 with a5 in {-1, +1}.
struct TaskSample {
  int benchmark = 1;
  std::vector<double> alpha;
};

struct EnvState {
  int benchmark = 1;
  double p = 0.0;  // benchmark 1 target position
  double ux = 0.0;
  double uy = 0.0;
  std::vector<double> obs;
};

TaskSample sample_task(int benchmark, Rng& rng, const EnvOptions& opts = {});
EnvState reset(const TaskSample& task, Rng& rng, const EnvOptions& opts = {});

/// Each step mutates `state` into the next state and returns the reward.
double bench1_step(EnvState& state, double action, const TaskSample& task, Rng& rng);
double bench2_step(EnvState& state, double action, const TaskSample& task, Rng& rng,
                   const EnvOptions& opts = {});
double bench3_step(EnvState& state, double action, const TaskSample& task, Rng& rng,
                   const EnvOptions& opts = {});
double env_step(EnvState& state, double action, const TaskSample& task, Rng& rng,
                const EnvOptions& opts = {});

/// Torus wrap by +-4 into [-2, 2].
double wrap(double u);

/// Benchmark 3 reward for a pre-move position (0 outside both targets).
double bench3_reward(double ux, double uy, const TaskSample& task, const EnvOptions& opts = {});

std::size_t obs_dim(int benchmark);
models::ActionBounds action_bounds(int benchmark);

/// Per-episode stream derived from (master seed, batch, episode).
Rng episode_rng(std::uint64_t master_seed, std::uint64_t batch, std::uint64_t episode);

}  // namespace nmn::envs
