#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string_view>
#include <utility>
#include <vector>

#include "nmn/core/parallel.hpp"
#include "nmn/envs/benchmarks.hpp"
#include "nmn/models/model.hpp"

namespace nmn::harness {

/// Stages, in order:
///   a  z locked to the value emitted at t = 0
///   b  unlocked
///   c  z locked to the value emitted at the first step of c
///   d  targets' rewards swapped (alpha5 flipped), z still locked from c
///   e  unlocked, targets stay swapped
struct StagePlan {
  std::vector<std::pair<char, std::size_t>> stages{
      {'a', 100}, {'b', 100}, {'c', 100}, {'d', 100}, {'e', 100}};

  /// Throws ConfigError unless the plan is exactly a, b, c, d, e in that order
  /// with a positive step count each.
  void validate() const;
  [[nodiscard]] std::size_t total_steps() const;
};

/// Parses "a:100,b:100,c:100,d:100,e:100".
StagePlan parse_stage_plan(std::string_view text);

struct FreezeSpec {
  StagePlan plan;
  std::size_t episodes = 100;
  std::size_t layer = 0;  // index into Model::neuromod_layers()
  std::uint64_t seed = 0;
  envs::EnvOptions env;
  core::ExecPolicy exec = core::ExecPolicy::Serial;
};

struct FreezeStep {
  std::size_t t = 0;
  char stage = 'a';
  bool locked = false;
  double alpha5 = 1.0;   // in force at this step
  double action = 0.0;
  double reward = 0.0;
  std::vector<double> z;      // fed to the main network
  std::vector<double> scale;  // of the selected modulated layer
};

struct FreezeEpisode {
  std::size_t episode = 0;
  std::vector<double> alpha;  // as drawn, before any flip
  std::vector<FreezeStep> steps;
};

struct StageHits {
  std::size_t positive = 0;  // +100 rewards
  std::size_t negative = 0;  // -50 rewards
};

/// Benchmark 3 only; plays greedy actions. Episode e uses
/// envs::episode_rng(seed, 0, e). Throws VariantError for an RNN and
/// ConfigError for a non-benchmark-3 model or an invalid plan.
std::vector<FreezeEpisode> freeze_experiment(const models::Model& actor, const FreezeSpec& spec);

/// Hit counts per stage a..e.
std::array<StageHits, 5> count_hits(const std::vector<FreezeEpisode>& episodes);

/// One JSON object per step tagged with its stage.
void write_freeze_jsonl(std::ostream& os, const std::vector<FreezeEpisode>& episodes);

}  // namespace nmn::harness
