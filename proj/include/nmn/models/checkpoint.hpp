#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "nmn/core/parameter_store.hpp"
#include "nmn/models/architecture.hpp"
#include "nmn/models/model.hpp"

namespace nmn::models {

/// Self-describing JSON snapshot of a trained agent: architecture config,
/// actor (and optionally critic) parameters with names, shapes and row-major
/// data, the generator state, and free-form metadata.
struct Checkpoint {
  ModelConfig config;  // the actor's; the critic shares it with a scalar head
  core::ParameterStore actor;
  std::optional<core::ParameterStore> critic;
  std::string rng_state;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const core::ParameterStore& p);
core::ParameterStore params_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws ConfigError on a malformed or incompatible file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Model actor_from_checkpoint(const Checkpoint& ckpt);
Model critic_from_checkpoint(const Checkpoint& ckpt);

}  // namespace nmn::models
