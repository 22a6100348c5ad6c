#include "nmn/harness/modulation.hpp"

#include <fmt/format.h>

#include "nmn/core/errors.hpp"
#include "nmn/envs/runner.hpp"
#include "nmn/trainer/rollout.hpp"

namespace nmn::harness {

std::vector<ModulationTrace> record_modulation(const models::Model& actor,
                                               const ModulationSpec& spec) {
  if (!actor.is_nmn()) {
    throw VariantError("record_modulation needs an NMN checkpoint; an RNN emits no z");
  }
  const auto mod_layers = actor.neuromod_layers();
  if (spec.layer >= mod_layers.size()) {
    throw ContractError(fmt::format("layer selector {} out of range: the network has {} modulated layers",
                                    spec.layer, mod_layers.size()));
  }
  const std::size_t layer_index = mod_layers[spec.layer];

  trainer::ModelPolicyFactory policy(actor, nullptr, true);
  envs::RunSpec run;
  run.benchmark = actor.config().benchmark;
  run.episodes = spec.episodes;
  run.steps = spec.steps;
  run.master_seed = spec.seed;
  run.batch_index = 0;
  run.env = spec.env;
  run.exec = spec.exec;
  const auto histories = envs::run_episodes(policy, run);

  std::vector<ModulationTrace> traces(histories.size());
  core::parallel_for(histories.size(), spec.exec, [&](std::size_t e) {
    const envs::History& h = histories[e];
    ModulationTrace& tr = traces[e];
    tr.episode = e;
    tr.alpha = h.task.alpha;
    tr.z_dim = h.signal_dim;
    tr.reward = h.r;
    tr.z = h.z;
    std::vector<double> s;
    std::vector<double> b;
    for (std::size_t t = 0; t < h.steps(); ++t) {
      const std::span<const double> zt(h.z.data() + t * h.signal_dim, h.signal_dim);
      actor.modulation_factors(layer_index, zt, s, b);
      tr.neurons = s.size();
      tr.scale.insert(tr.scale.end(), s.begin(), s.end());
      tr.offset.insert(tr.offset.end(), b.begin(), b.end());
    }
  });
  return traces;
}

void write_modulation_csv(std::ostream& os, const std::vector<ModulationTrace>& traces) {
  if (traces.empty()) {
    return;
  }
  const ModulationTrace& f = traces.front();
  std::string line = "episode,t";
  for (std::size_t i = 0; i < f.alpha.size(); ++i) line += fmt::format(",alpha_{}", i);
  line += ",reward";
  for (std::size_t i = 0; i < f.z_dim; ++i) line += fmt::format(",z_{}", i);
  for (std::size_t i = 0; i < f.neurons; ++i) line += fmt::format(",s_{}", i);
  for (std::size_t i = 0; i < f.neurons; ++i) line += fmt::format(",b_{}", i);
  os << line << '\n';
  for (const ModulationTrace& tr : traces) {
    for (std::size_t t = 0; t < tr.steps(); ++t) {
      line = fmt::format("{},{}", tr.episode, t);
      for (double a : tr.alpha) line += fmt::format(",{}", a);
      line += fmt::format(",{}", tr.reward[t]);
      for (std::size_t i = 0; i < tr.z_dim; ++i) line += fmt::format(",{}", tr.z[t * tr.z_dim + i]);
      for (std::size_t i = 0; i < tr.neurons; ++i) line += fmt::format(",{}", tr.scale[t * tr.neurons + i]);
      for (std::size_t i = 0; i < tr.neurons; ++i) line += fmt::format(",{}", tr.offset[t * tr.neurons + i]);
      os << line << '\n';
    }
  }
}

}  // namespace nmn::harness
