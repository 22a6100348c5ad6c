#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "nmn/core/parallel.hpp"
#include "nmn/envs/benchmarks.hpp"

namespace nmn::envs {

/// One episode's trajectory [x0, a0, r0, x1, ..., x_L] plus per-step
/// auxiliary logs. Storage is flat and row-major per step.
struct History {
  TaskSample task;
  std::size_t obs_dim = 0;
  std::size_t act_dim = 1;
  std::size_t signal_dim = 0;
  std::vector<double> x;      // (steps + 1) * obs_dim
  std::vector<double> a;      // steps * act_dim, executed (clipped) actions
  std::vector<double> r;      // steps
  std::vector<double> raw;    // steps * act_dim, unclipped samples
  std::vector<double> mu;     // steps * act_dim
  std::vector<double> sigma;  // steps * act_dim
  std::vector<double> value;  // steps + 1 when a critic is attached, else empty
  std::vector<double> z;      // steps * signal_dim (NMN only)

  [[nodiscard]] std::size_t steps() const { return r.size(); }
  [[nodiscard]] std::span<const double> obs(std::size_t t) const {
    return {x.data() + t * obs_dim, obs_dim};
  }
  [[nodiscard]] std::span<const double> action(std::size_t t) const {
    return {a.data() + t * act_dim, act_dim};
  }
  /// Feedback triple [x_{t-1}, a_{t-1}, r_{t-1}] seen at step t; zeros at t = 0.
  void feedback(std::size_t t, std::span<double> out) const;
};

/// What a policy reports for one step.
struct StepRecord {
  std::vector<double> action;
  std::vector<double> raw;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> z;
  double value = 0.0;
  bool has_value = false;
};

/// Per-episode policy instance; owns its recurrent state.
class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  virtual void act(std::span<const double> feedback, std::span<const double> obs, Rng& rng,
                   StepRecord& out) = 0;
  /// Value of the final history h_L, when the policy carries a critic.
  virtual bool terminal_value(std::span<const double> feedback, std::span<const double> obs,
                              double& value) {
    (void)feedback;
    (void)obs;
    (void)value;
    return false;
  }
};

class PolicyFactory {
 public:
  virtual ~PolicyFactory() = default;
  [[nodiscard]] virtual std::unique_ptr<EpisodePolicy> start_episode(const TaskSample& task) const = 0;
};

struct RunSpec {
  int benchmark = 1;
  std::size_t episodes = 50;
  std::size_t steps = 500;
  std::uint64_t master_seed = 0;
  std::uint64_t batch_index = 0;
  EnvOptions env;
  core::ExecPolicy exec = core::ExecPolicy::Serial;
};

/// Plays `episodes` episodes of exactly `steps` actions each. Episode i uses
/// episode_rng(master_seed, batch_index, i) for the task, the environment and
/// the action noise, so results do not depend on the execution policy.
/// A policy failure is rethrown as NumericError naming the episode.
std::vector<History> run_episodes(const PolicyFactory& policy, const RunSpec& spec);

/// One JSON object per step: episode, t, x, a, r, mu, sigma, value, z, alpha.
void write_trajectories(std::ostream& os, std::span<const History> histories,
                        std::size_t first_episode);

}  // namespace nmn::envs
