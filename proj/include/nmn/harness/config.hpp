#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "nmn/core/parallel.hpp"
#include "nmn/envs/benchmarks.hpp"
#include "nmn/models/architecture.hpp"
#include "nmn/trainer/hyperparams.hpp"
#include "nmn/trainer/train.hpp"

namespace nmn::harness {

inline constexpr const char* kOutputRootEnv = "NMN_OUTPUT_ROOT";

struct AnalysisOptions {
  std::size_t episodes = 1000;
  std::size_t steps = 100;
  std::size_t layer = 0;  // index into Model::neuromod_layers()
};

/// Everything needed to re-execute a set of training runs. The episode budget
/// is hp.E.
struct RunConfig {
  models::ModelConfig model;
  trainer::HyperParams hp;
  envs::EnvOptions env;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir;
  std::size_t checkpoint_every = 0;
  std::size_t trajectory_every = 0;
  core::ExecPolicy exec = core::ExecPolicy::Serial;
  AnalysisOptions analysis;
};

/// $NMN_OUTPUT_ROOT when set and non-empty, otherwise "runs".
std::filesystem::path default_output_root();

/// Overlays the keys present in `j` on `base`. Accepts either "seed" or
/// "seeds"; a "decisions" block (as written into run directories) is ignored.
/// Unknown keys raise ConfigError naming the key.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json run_config_to_json(const RunConfig& c);

/// Parses a JSON file; malformed input raises ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// output_dir / "seed_<seed>".
std::filesystem::path seed_run_dir(const RunConfig& c, std::uint64_t seed);

trainer::TrainConfig train_config_for(const RunConfig& c, std::uint64_t seed);

}  // namespace nmn::harness
