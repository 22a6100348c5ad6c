#include "nmn/harness/freeze.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nmn/core/errors.hpp"
#include "nmn/models/gaussian.hpp"

namespace nmn::harness {

void StagePlan::validate() const {
  constexpr std::string_view kOrder = "abcde";
  if (stages.size() != kOrder.size()) {
    throw ConfigError(fmt::format("stage plan must cover stages a..e once each, got {} stages",
                                  stages.size()));
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].first != kOrder[i]) {
      throw ConfigError(fmt::format("stage plan entry {} is '{}', expected '{}'", i,
                                    stages[i].first, kOrder[i]));
    }
    if (stages[i].second == 0) {
      throw ConfigError(fmt::format("stage '{}' has no steps", stages[i].first));
    }
  }
}

std::size_t StagePlan::total_steps() const {
  std::size_t n = 0;
  for (const auto& s : stages) {
    n += s.second;
  }
  return n;
}

StagePlan parse_stage_plan(std::string_view text) {
  StagePlan plan;
  plan.stages.clear();
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    const auto colon = item.find(':');
    if (colon != 1) {
      throw ConfigError(fmt::format("stage plan item '{}' is not of the form x:steps", item));
    }
    std::size_t steps = 0;
    const auto num = item.substr(2);
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), steps);
    if (ec != std::errc{} || ptr != num.data() + num.size()) {
      throw ConfigError(fmt::format("stage plan item '{}' has a bad step count", item));
    }
    plan.stages.emplace_back(item[0], steps);
  }
  plan.validate();
  return plan;
}

namespace {

FreezeEpisode play(const models::Model& actor, const FreezeSpec& spec, std::size_t layer_index,
                   std::size_t e) {
  envs::Rng rng = envs::episode_rng(spec.seed, 0, e);
  envs::TaskSample task = envs::sample_task(3, rng, spec.env);
  envs::EnvState env = envs::reset(task, rng, spec.env);

  FreezeEpisode ep;
  ep.episode = e;
  ep.alpha = task.alpha;

  const std::size_t k = actor.signal_dim();
  const std::size_t obs_n = actor.obs_dim();
  models::RecurrentState state = actor.initial_state();
  std::vector<double> fb(actor.feedback_dim(), 0.0);
  std::vector<double> head(actor.output_dim());
  std::vector<double> z(k);
  std::vector<double> frozen;
  std::vector<double> scale;
  std::vector<double> offset;
  const auto bounds = envs::action_bounds(3);

  std::size_t t = 0;
  for (const auto& [stage, count] : spec.plan.stages) {
    const bool locked = stage == 'a' || stage == 'c' || stage == 'd';
    if (stage == 'd') {
      task.alpha[4] = -task.alpha[4];
    }
    for (std::size_t i = 0; i < count; ++i, ++t) {
      const std::vector<double> obs = env.obs;
      const bool fresh_lock = (stage == 'a' || stage == 'c') && i == 0;
      if (locked && !fresh_lock) {
        actor.step(fb, obs, state, head, z, frozen);
      } else {
        actor.step(fb, obs, state, head, z);
        if (fresh_lock) {
          frozen = z;
        }
      }
      const auto g = models::gaussian_from_head(head);
      const double a = std::clamp(g.mu[0], bounds.low, bounds.high);
      const double r = envs::env_step(env, a, task, rng, spec.env);

      FreezeStep st;
      st.t = t;
      st.stage = stage;
      st.locked = locked;
      st.alpha5 = task.alpha[4];
      st.action = a;
      st.reward = r;
      st.z = locked ? frozen : z;
      actor.modulation_factors(layer_index, st.z, scale, offset);
      st.scale = scale;
      ep.steps.push_back(std::move(st));

      std::copy(obs.begin(), obs.end(), fb.begin());
      fb[obs_n] = a;
      fb[obs_n + 1] = r;
    }
  }
  return ep;
}

}  // namespace

std::vector<FreezeEpisode> freeze_experiment(const models::Model& actor, const FreezeSpec& spec) {
  if (!actor.is_nmn()) {
    throw VariantError("freeze_experiment needs an NMN checkpoint; an RNN emits no z");
  }
  if (actor.config().benchmark != 3) {
    throw ConfigError(fmt::format("freeze_experiment runs on benchmark 3, checkpoint is benchmark {}",
                                  actor.config().benchmark));
  }
  spec.plan.validate();
  const auto mod_layers = actor.neuromod_layers();
  if (spec.layer >= mod_layers.size()) {
    throw ContractError(fmt::format("layer selector {} out of range: the network has {} modulated layers",
                                    spec.layer, mod_layers.size()));
  }
  std::vector<FreezeEpisode> out(spec.episodes);
  core::parallel_for(spec.episodes, spec.exec,
                     [&](std::size_t e) { out[e] = play(actor, spec, mod_layers[spec.layer], e); });
  return out;
}

std::array<StageHits, 5> count_hits(const std::vector<FreezeEpisode>& episodes) {
  std::array<StageHits, 5> hits{};
  for (const auto& ep : episodes) {
    for (const auto& st : ep.steps) {
      auto& h = hits[static_cast<std::size_t>(st.stage - 'a')];
      if (st.reward > 0.0) {
        ++h.positive;
      } else if (st.reward < 0.0) {
        ++h.negative;
      }
    }
  }
  return hits;
}

void write_freeze_jsonl(std::ostream& os, const std::vector<FreezeEpisode>& episodes) {
  for (const auto& ep : episodes) {
    for (const auto& st : ep.steps) {
      nlohmann::ordered_json j;
      j["episode"] = ep.episode;
      j["t"] = st.t;
      j["stage"] = std::string(1, st.stage);
      j["locked"] = st.locked;
      j["alpha"] = ep.alpha;
      j["alpha5"] = st.alpha5;
      j["action"] = st.action;
      j["reward"] = st.reward;
      j["z"] = st.z;
      j["scale"] = st.scale;
      os << j.dump() << '\n';
    }
  }
}

}  // namespace nmn::harness
