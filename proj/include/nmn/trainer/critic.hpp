#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "nmn/core/parallel.hpp"
#include "nmn/core/tape.hpp"
#include "nmn/envs/runner.hpp"
#include "nmn/models/model.hpp"
#include "nmn/trainer/hyperparams.hpp"

namespace nmn::trainer {

/// One trajectory batch with its discounted-return targets.
struct ReplayEntry {
  std::shared_ptr<const std::vector<envs::History>> histories;
  std::vector<std::vector<double>> targets;
};

/// The last `capacity` (crb + 1) batches; the oldest is evicted first.
class CriticReplayBuffer {
 public:
  explicit CriticReplayBuffer(std::size_t capacity);
  void push(ReplayEntry entry);
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] const ReplayEntry& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::size_t capacity_;
  std::deque<ReplayEntry> entries_;
};

/// Inclusive [first, last] step ranges of length T covering [0, steps); the
/// last range may be shorter.
std::vector<std::pair<std::size_t, std::size_t>> chunk_bounds(std::size_t steps, std::size_t T);

struct ChunkRef {
  std::size_t entry = 0;
  std::size_t episode = 0;
  std::size_t first = 0;
  std::size_t length = 0;
};

std::vector<ChunkRef> partition_chunks(const CriticReplayBuffer& replay, std::size_t steps,
                                       std::size_t T);

/// e_critic * ceil(num_chunks / (cmb * T)).
std::size_t critic_iterations(std::size_t num_chunks, const HyperParams& hp);

struct CriticWorkspace {
  std::vector<core::Tape> tapes;
  std::vector<core::GradientSet> grads;
};

/// Mean squared error of the critic over the given chunks. With `grad`
/// non-null also writes its gradient (overwriting). Each chunk is preceded
/// by a no-gradient pass from step 0 to reach its recurrent state.
double critic_loss(const models::Model& critic, const CriticReplayBuffer& replay,
                   std::span<const ChunkRef> chunks, const HyperParams& hp,
                   core::GradientSet* grad, CriticWorkspace* ws = nullptr,
                   core::ExecPolicy exec = core::ExecPolicy::Serial);

struct CriticUpdateReport {
  std::size_t iterations = 0;
  double first_loss = 0.0;
  double last_loss = 0.0;
  double mean_loss = 0.0;
};

/// Minibatch regression of the critic on the replay buffer: cmb chunks drawn
/// without replacement per step, the drawn set reset once exhausted. Adam
/// step indices are k * e_iter + m + 1. Throws ContractError on an empty
/// buffer.
CriticUpdateReport critic_update(models::Model& critic, const CriticReplayBuffer& replay,
                                 std::size_t k, const HyperParams& hp, std::mt19937_64& rng,
                                 CriticWorkspace& ws,
                                 core::ExecPolicy exec = core::ExecPolicy::Serial);

}  // namespace nmn::trainer
