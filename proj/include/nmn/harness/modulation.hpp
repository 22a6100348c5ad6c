#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "nmn/core/parallel.hpp"
#include "nmn/envs/benchmarks.hpp"
#include "nmn/models/model.hpp"

namespace nmn::harness {

struct ModulationSpec {
  std::size_t episodes = 1000;
  std::size_t steps = 100;
  std::size_t layer = 0;  // index into Model::neuromod_layers()
  std::uint64_t seed = 0;
  envs::EnvOptions env;
  core::ExecPolicy exec = core::ExecPolicy::Serial;
};

/// Per step: z, per-neuron scale s_i = z.w_s,i and offset b_i = z.w_b,i of the
/// selected layer, the task and the reward. Rows are flat, row-major by step.
struct ModulationTrace {
  std::size_t episode = 0;
  std::vector<double> alpha;
  std::size_t z_dim = 0;
  std::size_t neurons = 0;
  std::vector<double> reward;
  std::vector<double> z;
  std::vector<double> scale;
  std::vector<double> offset;

  [[nodiscard]] std::size_t steps() const { return reward.size(); }
};

/// Plays greedy (mean) actions for spec.episodes evaluation episodes; episode
/// e uses envs::episode_rng(seed, 0, e). Throws VariantError for an RNN and
/// ContractError for a layer index past the modulated layers.
std::vector<ModulationTrace> record_modulation(const models::Model& actor,
                                               const ModulationSpec& spec);

/// Header: episode,t,alpha_0..,reward,z_0..,s_0..,b_0.. with shortest
/// round-trip number formatting.
void write_modulation_csv(std::ostream& os, const std::vector<ModulationTrace>& traces);

}  // namespace nmn::harness
