#include "nmn/harness/config.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"
#include "nmn/models/checkpoint.hpp"

namespace nmn::harness {

using nlohmann::json;

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
  }
}

AnalysisOptions analysis_from_json(const json& j, AnalysisOptions a) {
  if (!j.is_object()) {
    throw ConfigError("config key 'analysis' must be an object");
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "episodes") a.episodes = get_as<std::size_t>(v, "analysis." + key);
    else if (key == "steps") a.steps = get_as<std::size_t>(v, "analysis." + key);
    else if (key == "layer") a.layer = get_as<std::size_t>(v, "analysis." + key);
    else throw ConfigError(fmt::format("unknown config key 'analysis.{}'", key));
  }
  return a;
}

}  // namespace

std::filesystem::path default_output_root() {
  const char* root = std::getenv(kOutputRootEnv);
  if (root != nullptr && *root != '\0') {
    return root;
  }
  return "runs";
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) {
    throw ConfigError("run config must be a JSON object");
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "benchmark") {
      c.model.benchmark = get_as<int>(v, key);
    } else if (key == "variant") {
      c.model.variant = models::parse_variant(get_as<std::string>(v, key));
    } else if (key == "activation_family") {
      c.model.family = models::parse_family(get_as<std::string>(v, key));
    } else if (key == "depth_override") {
      c.model.depth_override = get_as<int>(v, key);
    } else if (key == "hp") {
      c.hp = trainer::hyperparams_from_json(v, c.hp);
    } else if (key == "env") {
      c.env = trainer::env_options_from_json(v, c.env);
    } else if (key == "seed") {
      c.seeds = {get_as<std::uint64_t>(v, key)};
    } else if (key == "seeds") {
      c.seeds = get_as<std::vector<std::uint64_t>>(v, key);
    } else if (key == "output_dir") {
      c.output_dir = get_as<std::string>(v, key);
    } else if (key == "checkpoint_every") {
      c.checkpoint_every = get_as<std::size_t>(v, key);
    } else if (key == "trajectory_every") {
      c.trajectory_every = get_as<std::size_t>(v, key);
    } else if (key == "exec") {
      c.exec = core::parse_exec_policy(get_as<std::string>(v, key));
    } else if (key == "analysis") {
      c.analysis = analysis_from_json(v, c.analysis);
    } else if (key == "decisions") {
      continue;
    } else {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
  }
  if (c.seeds.empty()) {
    throw ConfigError("config key 'seeds' must list at least one seed");
  }
  models::plan_architecture(c.model);
  c.hp.validate();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json j = models::config_to_json(c.model);
  j["hp"] = trainer::hyperparams_to_json(c.hp);
  j["env"] = trainer::env_options_to_json(c.env);
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir.string();
  j["checkpoint_every"] = c.checkpoint_every;
  j["trajectory_every"] = c.trajectory_every;
  j["exec"] = std::string(core::exec_policy_name(c.exec));
  j["analysis"] = json{{"episodes", c.analysis.episodes},
                       {"steps", c.analysis.steps},
                       {"layer", c.analysis.layer}};
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed JSON in '{}': {}", path.string(), e.what()));
  }
}

std::filesystem::path seed_run_dir(const RunConfig& c, std::uint64_t seed) {
  return c.output_dir / fmt::format("seed_{}", seed);
}

trainer::TrainConfig train_config_for(const RunConfig& c, std::uint64_t seed) {
  trainer::TrainConfig t;
  t.model = c.model;
  t.hp = c.hp;
  t.env = c.env;
  t.seed = seed;
  t.run_dir = c.output_dir.empty() ? std::filesystem::path{} : seed_run_dir(c, seed);
  t.checkpoint_every = c.checkpoint_every;
  t.trajectory_every = c.trajectory_every;
  t.exec = c.exec;
  return t;
}

}  // namespace nmn::harness
