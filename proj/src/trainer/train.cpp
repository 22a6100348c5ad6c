#include "nmn/trainer/train.hpp"

#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "nmn/core/errors.hpp"
#include "nmn/models/checkpoint.hpp"
#include "nmn/trainer/actor.hpp"
#include "nmn/trainer/advantage.hpp"
#include "nmn/trainer/critic.hpp"
#include "nmn/trainer/rollout.hpp"

namespace nmn::trainer {

using nlohmann::json;

json hyperparams_to_json(const HyperParams& hp) {
  return json{{"B", hp.B},           {"lambda", hp.lambda},     {"gamma", hp.gamma},
              {"beta0", hp.beta0},   {"beta_min", hp.beta_min}, {"beta_max", hp.beta_max},
              {"d_targ", hp.d_targ}, {"a_lr0", hp.a_lr0},       {"omega1", hp.omega1},
              {"omega2", hp.omega2}, {"epsilon", hp.epsilon},   {"e_actor", hp.e_actor},
              {"crb", hp.crb},       {"cmb", hp.cmb},           {"c_lr", hp.c_lr},
              {"T", hp.T},           {"e_critic", hp.e_critic}, {"eta", hp.eta},
              {"L", hp.L},           {"L_prime", hp.L_prime},   {"d_thresh", hp.d_thresh},
              {"E", hp.E}};
}

namespace {

template <class T>
void read_key(const json& j, const std::string& key, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
  }
}

}  // namespace

HyperParams hyperparams_from_json(const json& j, HyperParams hp) {
  if (!j.is_object()) {
    throw ConfigError("config key 'hp' must be an object");
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "B") read_key(v, key, hp.B);
    else if (key == "lambda") read_key(v, key, hp.lambda);
    else if (key == "gamma") read_key(v, key, hp.gamma);
    else if (key == "beta0") read_key(v, key, hp.beta0);
    else if (key == "beta_min") read_key(v, key, hp.beta_min);
    else if (key == "beta_max") read_key(v, key, hp.beta_max);
    else if (key == "d_targ") read_key(v, key, hp.d_targ);
    else if (key == "a_lr0") read_key(v, key, hp.a_lr0);
    else if (key == "omega1") read_key(v, key, hp.omega1);
    else if (key == "omega2") read_key(v, key, hp.omega2);
    else if (key == "epsilon") read_key(v, key, hp.epsilon);
    else if (key == "e_actor") read_key(v, key, hp.e_actor);
    else if (key == "crb") read_key(v, key, hp.crb);
    else if (key == "cmb") read_key(v, key, hp.cmb);
    else if (key == "c_lr") read_key(v, key, hp.c_lr);
    else if (key == "T") read_key(v, key, hp.T);
    else if (key == "e_critic") read_key(v, key, hp.e_critic);
    else if (key == "eta") read_key(v, key, hp.eta);
    else if (key == "L") read_key(v, key, hp.L);
    else if (key == "L_prime") read_key(v, key, hp.L_prime);
    else if (key == "d_thresh") read_key(v, key, hp.d_thresh);
    else if (key == "E") read_key(v, key, hp.E);
    else throw ConfigError(fmt::format("unknown hyper-parameter '{}'", key));
  }
  return hp;
}

json env_options_to_json(const envs::EnvOptions& o) {
  return json{{"alpha_max", o.alpha_max},
              {"bench2_step_reward", o.bench2_step_reward},
              {"bench2_initial_times_pi", o.bench2_initial_times_pi},
              {"bench3_literal_routing", o.bench3_literal_routing}};
}

envs::EnvOptions env_options_from_json(const json& j, envs::EnvOptions o) {
  if (!j.is_object()) {
    throw ConfigError("config key 'env' must be an object");
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "alpha_max") read_key(v, key, o.alpha_max);
    else if (key == "bench2_step_reward") read_key(v, key, o.bench2_step_reward);
    else if (key == "bench2_initial_times_pi") read_key(v, key, o.bench2_initial_times_pi);
    else if (key == "bench3_literal_routing") read_key(v, key, o.bench3_literal_routing);
    else throw ConfigError(fmt::format("unknown env option '{}'", key));
  }
  return o;
}

json train_config_to_json(const TrainConfig& c) {
  json j = models::config_to_json(c.model);
  j["hp"] = hyperparams_to_json(c.hp);
  j["env"] = env_options_to_json(c.env);
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["trajectory_every"] = c.trajectory_every;
  j["decisions"] = json{
      {"gru_cell", "z/r/n gates, h' = (1 - z) h + z n"},
      {"init", "uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases and states"},
      {"sigma", fmt::format("softplus(s_raw) + {}", models::kSigmaFloor)},
      {"srelu_kink_derivative", 1},
      {"feedback_at_t0", "zeros"},
      {"log_likelihood_action", "executed (clipped) action"},
      {"td", "(1 - gamma) r_j + gamma c(h_{j+1}) - c(h_j)"},
      {"advantage_std", "population"},
      {"truncation", "gradient crosses step s-1 -> s only when floor(s / T) is unchanged"},
      {"adam_step_index", "1-based: k * epochs + m + 1"},
      {"early_stop", "revert to theta_k, keep Adam moments"},
      {"critic_chunks", "T-step chunks over [0, L'), last chunk may be short"},
      {"smoothing_window", kSmoothingWindow}};
  return j;
}

namespace {

double window_mean(std::span<const double> values, std::size_t i, std::size_t window) {
  const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
  double s = 0.0;
  for (std::size_t j = first; j <= i; ++j) {
    s += values[j];
  }
  return s / static_cast<double>(i + 1 - first);
}

}  // namespace

std::vector<double> running_mean(std::span<const double> values, std::size_t window) {
  if (window == 0) {
    throw ContractError("running_mean: window must be >= 1");
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = window_mean(values, i, window);
  }
  return out;
}

std::uint64_t actor_init_seed(std::uint64_t master) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    0x61u};
  std::mt19937_64 g(seq);
  return g();
}

std::uint64_t critic_init_seed(std::uint64_t master) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    0x63u};
  std::mt19937_64 g(seq);
  return g();
}

namespace {

models::ModelConfig with_head(models::ModelConfig c, models::Head h) {
  c.head = h;
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                      const models::Model& actor, const models::Model& critic,
                      const std::mt19937_64& rng, const AdaptiveState& st, std::size_t episodes) {
  models::Checkpoint ck;
  ck.config = with_head(cfg.model, models::Head::Actor);
  ck.actor = actor.params();
  ck.critic = critic.params();
  std::ostringstream rs;
  rs << rng;
  ck.rng_state = rs.str();
  ck.metadata = json{{"k", st.k},
                     {"beta", st.beta},
                     {"a_lr", st.a_lr},
                     {"episodes", episodes},
                     {"seed", cfg.seed},
                     {"env", env_options_to_json(cfg.env)}};
  models::save_checkpoint(path, ck);
}

}  // namespace

TrainResult train(const TrainConfig& config,
                  const std::function<void(const UpdateMetrics&)>& on_update) {
  const HyperParams& hp = config.hp;
  hp.validate();
  const int bench = config.model.benchmark;

  TrainResult res{{},
                  {},
                  {},
                  models::Model(with_head(config.model, models::Head::Actor),
                                actor_init_seed(config.seed)),
                  models::Model(with_head(config.model, models::Head::Critic),
                                critic_init_seed(config.seed)),
                  initial_adaptive_state(hp)};
  models::Model& actor = res.actor;
  models::Model& critic = res.critic;
  AdaptiveState& st = res.state;

  std::seed_seq critic_seq{static_cast<std::uint32_t>(config.seed),
                           static_cast<std::uint32_t>(config.seed >> 32), 0x72u};
  std::mt19937_64 critic_rng(critic_seq);

  const bool write = !config.run_dir.empty();
  std::unique_ptr<fmt::ostream> metrics;
  std::unique_ptr<fmt::ostream> updates;
  std::unique_ptr<std::ofstream> traj;
  if (write) {
    std::filesystem::create_directories(config.run_dir / "checkpoints");
    std::ofstream(config.run_dir / "config.json") << train_config_to_json(config).dump(2) << '\n';
    metrics = std::make_unique<fmt::ostream>(fmt::output_file((config.run_dir / "metrics.csv").string()));
    metrics->print("episode,return,smoothed_return\n");
    updates = std::make_unique<fmt::ostream>(
        fmt::output_file((config.run_dir / "update_metrics.csv").string()));
    updates->print("k,d,beta,a_lr,actor_loss,critic_loss,early_stop,actor_epochs\n");
    if (config.trajectory_every > 0) {
      traj = std::make_unique<std::ofstream>(config.run_dir / "trajectories.jsonl");
    }
  }

  CriticReplayBuffer replay(hp.crb + 1);
  ActorWorkspace actor_ws;
  CriticWorkspace critic_ws;

  for (std::size_t k = 0; hp.B * k < hp.E; ++k) {
    st.k = k;
    ModelPolicyFactory policy(actor, &critic, false);
    envs::RunSpec spec;
    spec.benchmark = bench;
    spec.episodes = hp.B;
    spec.steps = hp.L;
    spec.master_seed = config.seed;
    spec.batch_index = k;
    spec.env = config.env;
    spec.exec = config.exec;
    auto histories = std::make_shared<std::vector<envs::History>>(run_episodes(policy, spec));

    AdvantageBatch adv;
    for (const auto& h : *histories) {
      adv.td.push_back(compute_td(h.r, h.value, hp.gamma));
      adv.gae.push_back(compute_gae(adv.td.back(), hp.gamma, hp.lambda));
      adv.targets.push_back(critic_targets(h.r, hp.gamma));
    }
    adv.gae_norm = adv.gae;
    adv.stats = normalize_advantages(adv.gae_norm, hp.L_prime);

    const ActorBatch batch{*histories, adv.gae_norm, hp.L_prime};
    const ActorUpdateReport ar = actor_update(actor, batch, st, hp, actor_ws, config.exec);

    replay.push({histories, std::move(adv.targets)});
    const CriticUpdateReport cr = critic_update(critic, replay, k, hp, critic_rng, critic_ws,
                                                config.exec);

    UpdateMetrics um{k, ar.d, st.beta, st.a_lr, ar.last_loss, cr.mean_loss, ar.early_stop,
                     ar.epochs};
    res.updates.push_back(um);

    const std::size_t first_episode = res.returns.size();
    for (const auto& h : *histories) {
      double ret = 0.0;
      for (const double r : h.r) {
        ret += r;
      }
      res.returns.push_back(ret);
    }
    if (write) {
      for (std::size_t e = first_episode; e < res.returns.size(); ++e) {
        metrics->print("{},{},{}\n", e, res.returns[e],
                       window_mean(res.returns, e, kSmoothingWindow));
      }
      updates->print("{},{},{},{},{},{},{},{}\n", k, um.d, um.beta, um.a_lr, um.actor_loss,
                     um.critic_loss, um.early_stop ? 1 : 0, um.actor_epochs);
      if (traj && k % config.trajectory_every == 0) {
        envs::write_trajectories(*traj, *histories, first_episode);
      }
      if (config.checkpoint_every > 0 && (k + 1) % config.checkpoint_every == 0) {
        write_checkpoint(config.run_dir / "checkpoints" / fmt::format("ckpt_{:06}.json", k + 1),
                         config, actor, critic, critic_rng, st, res.returns.size());
      }
    }
    if (config.verbose) {
      double tail = 0.0;
      const std::size_t n = std::min<std::size_t>(hp.B, res.returns.size());
      for (std::size_t e = res.returns.size() - n; e < res.returns.size(); ++e) {
        tail += res.returns[e];
      }
      fmt::print(stderr, "k={} episodes={} mean_return={:.2f} d={:.5f} beta={:.4g} lr={:.3g}{}\n",
                 k, res.returns.size(), tail / static_cast<double>(n), um.d, um.beta, um.a_lr,
                 um.early_stop ? " early-stop" : "");
    }
    if (on_update) {
      on_update(um);
    }
  }
  st.k = res.updates.size();
  res.smoothed = running_mean(res.returns, kSmoothingWindow);
  if (write) {
    write_checkpoint(config.run_dir / "checkpoint.json", config, actor, critic, critic_rng, st,
                     res.returns.size());
  }
  return res;
}

}  // namespace nmn::trainer
