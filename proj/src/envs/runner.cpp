#include "nmn/envs/runner.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nmn/core/errors.hpp"

namespace nmn::envs {

void History::feedback(std::size_t t, std::span<double> out) const {
  if (out.size() != obs_dim + act_dim + 1) {
    throw DimensionError("History::feedback: output has the wrong length");
  }
  if (t == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const auto xp = obs(t - 1);
  const auto ap = action(t - 1);
  std::copy(xp.begin(), xp.end(), out.begin());
  std::copy(ap.begin(), ap.end(), out.begin() + static_cast<std::ptrdiff_t>(obs_dim));
  out[obs_dim + act_dim] = r[t - 1];
}

namespace {

History play_episode(const PolicyFactory& factory, const RunSpec& spec, std::size_t episode) {
  Rng rng = episode_rng(spec.master_seed, spec.batch_index, episode);
  History h;
  h.task = sample_task(spec.benchmark, rng, spec.env);
  EnvState state = reset(h.task, rng, spec.env);
  h.obs_dim = state.obs.size();
  h.act_dim = 1;
  const auto bounds = action_bounds(spec.benchmark);
  auto policy = factory.start_episode(h.task);

  h.x.reserve((spec.steps + 1) * h.obs_dim);
  h.a.reserve(spec.steps);
  h.r.reserve(spec.steps);
  h.x.insert(h.x.end(), state.obs.begin(), state.obs.end());
  std::vector<double> fb(h.obs_dim + h.act_dim + 1, 0.0);
  StepRecord rec;
  for (std::size_t t = 0; t < spec.steps; ++t) {
    h.feedback(t, fb);
    policy->act(fb, h.obs(t), rng, rec);
    const double a = std::clamp(rec.action.at(0), bounds.low, bounds.high);
    const double reward = env_step(state, a, h.task, rng, spec.env);
    h.a.push_back(a);
    h.r.push_back(reward);
    h.raw.insert(h.raw.end(), rec.raw.begin(), rec.raw.end());
    h.mu.insert(h.mu.end(), rec.mu.begin(), rec.mu.end());
    h.sigma.insert(h.sigma.end(), rec.sigma.begin(), rec.sigma.end());
    if (rec.has_value) {
      h.value.push_back(rec.value);
    }
    if (!rec.z.empty()) {
      h.signal_dim = rec.z.size();
      h.z.insert(h.z.end(), rec.z.begin(), rec.z.end());
    }
    h.x.insert(h.x.end(), state.obs.begin(), state.obs.end());
  }
  h.feedback(spec.steps, fb);
  double v = 0.0;
  if (policy->terminal_value(fb, h.obs(spec.steps), v)) {
    h.value.push_back(v);
  }
  return h;
}

}  // namespace

std::vector<History> run_episodes(const PolicyFactory& policy, const RunSpec& spec) {
  if (spec.episodes == 0 || spec.steps == 0) {
    throw ContractError("run_episodes: episodes and steps must be >= 1");
  }
  std::vector<History> out(spec.episodes);
  core::parallel_for(spec.episodes, spec.exec, [&](std::size_t i) {
    try {
      out[i] = play_episode(policy, spec, i);
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("episode {}: {}", i, e.what()));
    }
  });
  return out;
}

void write_trajectories(std::ostream& os, std::span<const History> histories,
                        std::size_t first_episode) {
  for (std::size_t e = 0; e < histories.size(); ++e) {
    const History& h = histories[e];
    for (std::size_t t = 0; t < h.steps(); ++t) {
      nlohmann::ordered_json j;
      j["episode"] = first_episode + e;
      j["t"] = t;
      const auto x = h.obs(t);
      j["x"] = std::vector<double>(x.begin(), x.end());
      const auto a = h.action(t);
      j["a"] = std::vector<double>(a.begin(), a.end());
      j["r"] = h.r[t];
      auto slice = [&](const std::vector<double>& v, std::size_t w) {
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(t * w),
                                   v.begin() + static_cast<std::ptrdiff_t>((t + 1) * w));
      };
      if (!h.mu.empty()) {
        j["mu"] = slice(h.mu, h.act_dim);
        j["sigma"] = slice(h.sigma, h.act_dim);
      }
      if (!h.value.empty()) {
        j["value"] = h.value[t];
      }
      if (h.signal_dim > 0) {
        j["z"] = slice(h.z, h.signal_dim);
      }
      j["alpha"] = h.task.alpha;
      os << j.dump() << '\n';
    }
  }
}

}  // namespace nmn::envs
