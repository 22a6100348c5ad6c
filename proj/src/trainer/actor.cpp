#include "nmn/trainer/actor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nmn/core/adam.hpp"
#include "nmn/core/errors.hpp"
#include "nmn/models/gaussian.hpp"

namespace nmn::trainer {

namespace {

void check_batch(const models::Model& actor, const ActorBatch& batch) {
  if (batch.histories.size() != batch.advantages.size() || batch.histories.empty()) {
    throw DimensionError("actor batch: need one advantage sequence per history");
  }
  if (actor.output_dim() != 2) {
    throw ContractError("actor batch: only one-dimensional actions are supported");
  }
  for (std::size_t i = 0; i < batch.histories.size(); ++i) {
    if (batch.histories[i].steps() < batch.steps || batch.advantages[i].size() < batch.steps) {
      throw DimensionError(fmt::format("actor batch: episode {} is shorter than {} steps", i,
                                       batch.steps));
    }
    if (batch.histories[i].obs_dim != actor.obs_dim()) {
      throw DimensionError("actor batch: observation width does not match the actor");
    }
  }
}

// Per-episode sums of ratio * A and KL.
struct EpisodeTerms {
  double ratio_adv = 0.0;
  double kl = 0.0;
};

}  // namespace

PolicySnapshot snapshot_policy(const models::Model& actor, const ActorBatch& batch,
                               core::ExecPolicy exec) {
  check_batch(actor, batch);
  const std::size_t n = batch.histories.size();
  PolicySnapshot s;
  s.mu.resize(n);
  s.sigma.resize(n);
  core::parallel_for(n, exec, [&](std::size_t i) {
    const auto& h = batch.histories[i];
    auto state = actor.initial_state();
    std::vector<double> fb(actor.feedback_dim());
    std::vector<double> head(2);
    s.mu[i].resize(batch.steps);
    s.sigma[i].resize(batch.steps);
    for (std::size_t t = 0; t < batch.steps; ++t) {
      h.feedback(t, fb);
      actor.step(fb, h.obs(t), state, head);
      s.mu[i][t] = head[0];
      s.sigma[i][t] = models::softplus(head[1]) + models::kSigmaFloor;
    }
  });
  return s;
}

ActorLossTerms actor_loss(const models::Model& actor, const ActorBatch& batch,
                          const PolicySnapshot& snapshot, double beta, const HyperParams& hp,
                          core::GradientSet* grad, ActorWorkspace* ws, core::ExecPolicy exec) {
  check_batch(actor, batch);
  const std::size_t n_ep = batch.histories.size();
  const double n_total = static_cast<double>(n_ep * batch.steps);
  const bool want_grad = grad != nullptr;

  ActorWorkspace local;
  if (ws == nullptr) {
    ws = &local;
  }
  if (want_grad) {
    ws->tapes.resize(n_ep);
    if (ws->grads.size() != n_ep || !ws->grads.front().aligned_with(actor.params())) {
      ws->grads.assign(n_ep, core::GradientSet(actor.params()));
    }
  }

  // Forward pass: per-episode outputs, either on tapes or with plain steps.
  std::vector<EpisodeTerms> terms(n_ep);
  std::vector<std::vector<int>> out_nodes(n_ep);
  std::vector<std::vector<double>> heads(n_ep);
  core::parallel_for(n_ep, exec, [&](std::size_t i) {
    const auto& h = batch.histories[i];
    std::vector<double> fb(actor.feedback_dim());
    auto& head = heads[i];
    head.resize(batch.steps * 2);
    if (want_grad) {
      auto& tape = ws->tapes[i];
      tape.clear();
      tape.bind(actor.params());
      out_nodes[i].resize(batch.steps);
      models::TapeStep prev;
      for (std::size_t t = 0; t < batch.steps; ++t) {
        h.feedback(t, fb);
        prev = actor.record_step(tape, fb, h.obs(t), t == 0 ? nullptr : &prev, t);
        out_nodes[i][t] = prev.output;
        const auto v = tape.value(prev.output);
        std::copy(v.begin(), v.end(), head.begin() + static_cast<std::ptrdiff_t>(t * 2));
      }
    } else {
      auto state = actor.initial_state();
      for (std::size_t t = 0; t < batch.steps; ++t) {
        h.feedback(t, fb);
        actor.step(fb, h.obs(t), state, {head.data() + t * 2, 2});
      }
    }
    EpisodeTerms& e = terms[i];
    for (std::size_t t = 0; t < batch.steps; ++t) {
      const double mu = head[t * 2];
      const double sig = models::softplus(head[t * 2 + 1]) + models::kSigmaFloor;
      const double mu0 = snapshot.mu[i][t];
      const double sig0 = snapshot.sigma[i][t];
      const double a = h.a[t * h.act_dim];
      // ln pi - ln pi_old; the 2 pi terms cancel.
      const double z = (a - mu) / sig;
      const double z0 = (a - mu0) / sig0;
      const double dlog = -std::log(sig) - 0.5 * z * z + std::log(sig0) + 0.5 * z0 * z0;
      e.ratio_adv += std::exp(dlog) * batch.advantages[i][t];
      const double vp = sig0 * sig0;
      const double vq = sig * sig;
      const double dm = mu - mu0;
      e.kl += 0.5 * (vp / vq + dm * dm / vq - 1.0 + std::log(vq / vp));
    }
  });

  ActorLossTerms out;
  double ratio_sum = 0.0;
  double kl_sum = 0.0;
  for (const auto& e : terms) {
    ratio_sum += e.ratio_adv;
    kl_sum += e.kl;
  }
  out.vanilla = -ratio_sum / n_total;
  out.d = kl_sum / n_total;
  const double excess = std::max(0.0, out.d - 2.0 * hp.d_targ);
  out.hinge = excess * excess;
  out.loss = out.vanilla + beta * out.d + hp.eta * out.hinge;
  if (!std::isfinite(out.loss)) {
    throw NumericError(fmt::format("actor loss is not finite (vanilla {}, d {})", out.vanilla, out.d));
  }
  if (!want_grad) {
    return out;
  }

  // Backward: seed d loss / d head at every step, then run each tape.
  const double c_d = beta + 2.0 * hp.eta * excess;
  core::parallel_for(n_ep, exec, [&](std::size_t i) {
    const auto& h = batch.histories[i];
    auto& tape = ws->tapes[i];
    const auto& head = heads[i];
    for (std::size_t t = 0; t < batch.steps; ++t) {
      const double mu = head[t * 2];
      const double s_raw = head[t * 2 + 1];
      const double sig = models::softplus(s_raw) + models::kSigmaFloor;
      const double mu0 = snapshot.mu[i][t];
      const double sig0 = snapshot.sigma[i][t];
      const double a = h.a[t * h.act_dim];
      const double adv = batch.advantages[i][t];
      const double z = (a - mu) / sig;
      const double z0 = (a - mu0) / sig0;
      const double ratio = std::exp(-std::log(sig) - 0.5 * z * z + std::log(sig0) + 0.5 * z0 * z0);
      const double dlogp_dmu = z / sig;
      const double dlogp_dsig = (z * z - 1.0) / sig;
      const double dm = mu - mu0;
      const double dkl_dmu = dm / (sig * sig);
      // Written so that it is exactly zero at the snapshot.
      const double dkl_dsig = (1.0 - (sig0 * sig0 + dm * dm) / (sig * sig)) / sig;
      const double g_mu = (-adv * ratio * dlogp_dmu + c_d * dkl_dmu) / n_total;
      const double g_sig = (-adv * ratio * dlogp_dsig + c_d * dkl_dsig) / n_total;
      auto adj = tape.adjoint(out_nodes[i][t]);
      adj[0] += g_mu;
      adj[1] += g_sig * core::sigmoid(s_raw);  // d softplus / dx
    }
    ws->grads[i].zero();
    tape.backward(ws->grads[i], hp.T);
  });
  grad->zero();
  for (const auto& g : ws->grads) {
    grad->add(g);
  }
  return out;
}

ActorUpdateReport actor_update(models::Model& actor, const ActorBatch& batch,
                               AdaptiveState& state, const HyperParams& hp, ActorWorkspace& ws,
                               core::ExecPolicy exec) {
  const PolicySnapshot snapshot = snapshot_policy(actor, batch, exec);
  const core::ParameterStore theta_k = actor.params();
  core::GradientSet grad(actor.params());
  const core::AdamConfig adam{hp.omega1, hp.omega2, hp.epsilon};

  ActorUpdateReport rep;
  for (std::size_t m = 0; m < hp.e_actor; ++m) {
    const ActorLossTerms t =
        actor_loss(actor, batch, snapshot, state.beta, hp, &grad, &ws, exec);
    if (m == 0) {
      rep.first_loss = t.loss;
    }
    rep.last_loss = t.loss;
    rep.d = t.d;
    rep.epoch_d.push_back(t.d);
    core::adam_step(actor.params(), grad, state.a_lr, state.k * hp.e_actor + m + 1, adam);
    rep.epochs = m + 1;
    if (t.d > hp.d_thresh * hp.d_targ) {
      actor.params().assign_values(theta_k);
      rep.early_stop = true;
      break;
    }
  }
  update_beta_lr(rep.d, state, hp);
  return rep;
}

void update_beta_lr(double d, AdaptiveState& state, const HyperParams& hp) {
  if (!(d >= 0.0)) {
    throw ContractError("update_beta_lr: d must be non-negative");
  }
  const double beta_k = state.beta;
  if (d > 2.0 * hp.d_targ) {
    state.beta = std::min(hp.beta_max, beta_k * 1.5);
    if (beta_k > 0.85 * hp.beta_max) {
      state.a_lr = state.a_lr / 1.5;
    }
  } else if (d < hp.d_targ / 2.0) {
    state.beta = std::max(hp.beta_min, beta_k / 1.5);
    if (beta_k < 1.15 * hp.beta_min) {
      state.a_lr = state.a_lr * 1.5;
    }
  }
}

}  // namespace nmn::trainer
