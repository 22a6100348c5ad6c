#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "nmn/core/parallel.hpp"
#include "nmn/envs/benchmarks.hpp"
#include "nmn/models/model.hpp"
#include "nmn/trainer/hyperparams.hpp"

namespace nmn::trainer {

struct TrainConfig {
  models::ModelConfig model;  // benchmark, variant, activation family, depth
  HyperParams hp;
  envs::EnvOptions env;
  std::uint64_t seed = 0;
  std::filesystem::path run_dir;      // empty: keep everything in memory
  std::size_t checkpoint_every = 0;   // iterations between checkpoints; 0 = final only
  std::size_t trajectory_every = 0;   // dump batch k to trajectories.jsonl when k % n == 0
  core::ExecPolicy exec = core::ExecPolicy::Serial;
  bool verbose = false;
};

nlohmann::json hyperparams_to_json(const HyperParams& hp);
/// Unknown keys are rejected with ConfigError naming the key.
HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams base = {});
nlohmann::json env_options_to_json(const envs::EnvOptions& o);
envs::EnvOptions env_options_from_json(const nlohmann::json& j, envs::EnvOptions base = {});

/// Complete description of one run, including the fixed modelling choices.
nlohmann::json train_config_to_json(const TrainConfig& c);

struct UpdateMetrics {
  std::size_t k = 0;
  double d = 0.0;
  double beta = 0.0;  // after the update
  double a_lr = 0.0;  // after the update
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  bool early_stop = false;
  std::size_t actor_epochs = 0;
};

struct TrainResult {
  std::vector<double> returns;   // undiscounted, one per episode
  std::vector<double> smoothed;  // running mean, window 1000
  std::vector<UpdateMetrics> updates;
  models::Model actor;
  models::Model critic;
  AdaptiveState state;
};

inline constexpr std::size_t kSmoothingWindow = 1000;

/// Mean of the last min(i + 1, window) values at every index i, each summed
/// directly so the column can be recomputed exactly offline.
std::vector<double> running_mean(std::span<const double> values, std::size_t window);

/// Runs iterations k = 0, 1, ... while B * k < E. Writes config.json,
/// metrics.csv, update_metrics.csv, checkpoints/ and optionally
/// trajectories.jsonl under run_dir when it is set.
TrainResult train(const TrainConfig& config,
                  const std::function<void(const UpdateMetrics&)>& on_update = {});

/// Initial-parameter seeds derived from the master seed.
std::uint64_t actor_init_seed(std::uint64_t master);
std::uint64_t critic_init_seed(std::uint64_t master);

}  // namespace nmn::trainer
