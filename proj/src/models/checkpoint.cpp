#include "nmn/models/checkpoint.hpp"

#include <fstream>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"

namespace nmn::models {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "nmn-checkpoint";
constexpr int kVersion = 1;
}  // namespace

json config_to_json(const ModelConfig& c) {
  return json{{"benchmark", c.benchmark},
              {"variant", variant_name(c.variant)},
              {"activation_family", family_name(c.family)},
              {"depth_override", c.depth_override}};
}

ModelConfig config_from_json(const json& j) {
  try {
    ModelConfig c;
    c.benchmark = j.at("benchmark").get<int>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.family = parse_family(j.value("activation_family", std::string("default")));
    c.depth_override = j.value("depth_override", -1);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("model config: {}", e.what()));
  }
}

json params_to_json(const core::ParameterStore& p) {
  json arr = json::array();
  for (const auto& e : p.entries()) {
    arr.push_back({{"name", e.name},
                   {"rows", e.value.rows()},
                   {"cols", e.value.cols()},
                   {"data", std::vector<double>(e.value.flat().begin(), e.value.flat().end())}});
  }
  return arr;
}

core::ParameterStore params_from_json(const json& j) {
  core::ParameterStore p;
  try {
    for (const auto& e : j) {
      const auto rows = e.at("rows").get<std::size_t>();
      const auto cols = e.at("cols").get<std::size_t>();
      const auto data = e.at("data").get<std::vector<double>>();
      if (data.size() != rows * cols) {
        throw ConfigError(fmt::format("checkpoint: parameter '{}' has {} values for shape {}x{}",
                                      e.at("name").get<std::string>(), data.size(), rows, cols));
      }
      const auto idx = p.add(e.at("name").get<std::string>(), rows, cols);
      std::copy(data.begin(), data.end(), p.value(idx).data());
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("checkpoint parameters: {}", e.what()));
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = config_to_json(ckpt.config);
  j["actor"] = params_to_json(ckpt.actor);
  if (ckpt.critic) {
    j["critic"] = params_to_json(*ckpt.critic);
  }
  j["rng_state"] = ckpt.rng_state;
  j["metadata"] = ckpt.metadata;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream os(path);
  if (!os) {
    throw ConfigError(fmt::format("cannot write checkpoint '{}'", path.string()));
  }
  os << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError(fmt::format("cannot open checkpoint '{}'", path.string()));
  }
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("checkpoint '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  if (j.value("format", std::string()) != kFormat || j.value("version", 0) != kVersion) {
    throw ConfigError(fmt::format("'{}' is not a version-{} checkpoint", path.string(), kVersion));
  }
  Checkpoint c;
  c.config = config_from_json(j.at("config"));
  c.actor = params_from_json(j.at("actor"));
  if (j.contains("critic")) {
    c.critic = params_from_json(j.at("critic"));
  }
  c.rng_state = j.value("rng_state", std::string());
  c.metadata = j.value("metadata", json::object());
  return c;
}

Model actor_from_checkpoint(const Checkpoint& ckpt) {
  ModelConfig c = ckpt.config;
  c.head = Head::Actor;
  return Model(c, ckpt.actor);
}

Model critic_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.critic) {
    throw ConfigError("checkpoint has no critic parameters");
  }
  ModelConfig c = ckpt.config;
  c.head = Head::Critic;
  return Model(c, *ckpt.critic);
}

}  // namespace nmn::models
