#include "nmn/trainer/critic.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nmn/core/adam.hpp"
#include "nmn/core/errors.hpp"

namespace nmn::trainer {

CriticReplayBuffer::CriticReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw ConfigError("critic replay buffer needs capacity >= 1");
  }
}

void CriticReplayBuffer::push(ReplayEntry entry) {
  if (!entry.histories || entry.histories->size() != entry.targets.size()) {
    throw DimensionError("replay entry: need one target sequence per history");
  }
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) {
    entries_.pop_front();
  }
}

std::vector<std::pair<std::size_t, std::size_t>> chunk_bounds(std::size_t steps, std::size_t T) {
  if (T == 0) {
    throw ContractError("chunk_bounds: T must be >= 1");
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t first = 0; first < steps; first += T) {
    out.emplace_back(first, std::min(first + T, steps) - 1);
  }
  return out;
}

std::vector<ChunkRef> partition_chunks(const CriticReplayBuffer& replay, std::size_t steps,
                                       std::size_t T) {
  const auto bounds = chunk_bounds(steps, T);
  std::vector<ChunkRef> out;
  for (std::size_t e = 0; e < replay.size(); ++e) {
    for (std::size_t i = 0; i < replay[e].histories->size(); ++i) {
      for (const auto& [first, last] : bounds) {
        out.push_back({e, i, first, last - first + 1});
      }
    }
  }
  return out;
}

std::size_t critic_iterations(std::size_t num_chunks, const HyperParams& hp) {
  const std::size_t per = hp.cmb * hp.T;
  return hp.e_critic * ((num_chunks + per - 1) / per);
}

double critic_loss(const models::Model& critic, const CriticReplayBuffer& replay,
                   std::span<const ChunkRef> chunks, const HyperParams& hp,
                   core::GradientSet* grad, CriticWorkspace* ws, core::ExecPolicy exec) {
  if (chunks.empty()) {
    throw ContractError("critic_loss: no chunks");
  }
  if (critic.output_dim() != 1) {
    throw ContractError("critic_loss: the critic must have a scalar output");
  }
  const bool want_grad = grad != nullptr;
  CriticWorkspace local;
  if (ws == nullptr) {
    ws = &local;
  }
  const std::size_t n = chunks.size();
  if (want_grad) {
    ws->tapes.resize(std::max(ws->tapes.size(), n));
    if (ws->grads.size() < n || !ws->grads.front().aligned_with(critic.params())) {
      ws->grads.assign(n, core::GradientSet(critic.params()));
    }
  }
  std::size_t total = 0;
  for (const auto& c : chunks) {
    total += c.length;
  }
  const double inv_total = 1.0 / static_cast<double>(total);

  std::vector<double> sq(n, 0.0);
  core::parallel_for(n, exec, [&](std::size_t ci) {
    const ChunkRef& c = chunks[ci];
    const auto& h = (*replay[c.entry].histories)[c.episode];
    const auto& target = replay[c.entry].targets[c.episode];
    if (c.first + c.length > std::min(h.steps(), target.size())) {
      throw DimensionError("critic chunk extends past the stored trajectory");
    }
    std::vector<double> fb(critic.feedback_dim());
    auto state = critic.initial_state();
    double v = 0.0;
    for (std::size_t t = 0; t < c.first; ++t) {
      h.feedback(t, fb);
      critic.step(fb, h.obs(t), state, {&v, 1});
    }
    if (!want_grad) {
      for (std::size_t t = c.first; t < c.first + c.length; ++t) {
        h.feedback(t, fb);
        critic.step(fb, h.obs(t), state, {&v, 1});
        const double e = v - target[t];
        sq[ci] += e * e;
      }
      return;
    }
    auto& tape = ws->tapes[ci];
    tape.clear();
    tape.bind(critic.params());
    models::TapeStep prev;
    const models::TapeStep* prev_ptr = nullptr;
    if (c.first > 0) {
      // The prefix state enters as constants; no gradient crosses the chunk start.
      for (const auto& hidden : state.hidden) {
        prev.gru.push_back(tape.input(hidden, c.first - 1));
      }
      prev_ptr = &prev;
    }
    std::vector<std::pair<int, double>> residuals;
    residuals.reserve(c.length);
    for (std::size_t t = c.first; t < c.first + c.length; ++t) {
      h.feedback(t, fb);
      prev = critic.record_step(tape, fb, h.obs(t), prev_ptr, t);
      prev_ptr = &prev;
      const double e = tape.value(prev.output)[0] - target[t];
      sq[ci] += e * e;
      residuals.emplace_back(prev.output, e);
    }
    for (const auto& [node, e] : residuals) {
      tape.adjoint(node)[0] += 2.0 * e * inv_total;
    }
    ws->grads[ci].zero();
    tape.backward(ws->grads[ci], hp.T);
  });

  double sum = 0.0;
  for (const double s : sq) {
    sum += s;
  }
  if (want_grad) {
    grad->zero();
    for (std::size_t ci = 0; ci < n; ++ci) {
      grad->add(ws->grads[ci]);
    }
  }
  const double loss = sum * inv_total;
  if (!std::isfinite(loss)) {
    throw NumericError("critic loss is not finite");
  }
  return loss;
}

CriticUpdateReport critic_update(models::Model& critic, const CriticReplayBuffer& replay,
                                 std::size_t k, const HyperParams& hp, std::mt19937_64& rng,
                                 CriticWorkspace& ws, core::ExecPolicy exec) {
  if (replay.size() == 0) {
    throw ContractError("critic_update: empty replay buffer");
  }
  const auto all = partition_chunks(replay, hp.L_prime, hp.T);
  const std::size_t e_iter = critic_iterations(all.size(), hp);
  const core::AdamConfig adam{hp.omega1, hp.omega2, hp.epsilon};
  core::GradientSet grad(critic.params());

  // Drawing uniformly from the not-yet-used set until it empties is the same
  // as walking a fresh random permutation.
  std::vector<std::size_t> order(all.size());
  std::size_t cursor = order.size();
  std::vector<ChunkRef> minibatch;

  CriticUpdateReport rep;
  rep.iterations = e_iter;
  double loss_sum = 0.0;
  for (std::size_t m = 0; m < e_iter; ++m) {
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
      }
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    minibatch.clear();
    while (minibatch.size() < hp.cmb && cursor < order.size()) {
      minibatch.push_back(all[order[cursor++]]);
    }
    const double loss = critic_loss(critic, replay, minibatch, hp, &grad, &ws, exec);
    if (m == 0) {
      rep.first_loss = loss;
    }
    rep.last_loss = loss;
    loss_sum += loss;
    core::adam_step(critic.params(), grad, hp.c_lr, k * e_iter + m + 1, adam);
  }
  rep.mean_loss = e_iter > 0 ? loss_sum / static_cast<double>(e_iter) : 0.0;
  return rep;
}

}  // namespace nmn::trainer
