#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nmn/core/parallel.hpp"
#include "nmn/core/parameter_store.hpp"
#include "nmn/core/tape.hpp"
#include "nmn/envs/runner.hpp"
#include "nmn/models/model.hpp"
#include "nmn/trainer/hyperparams.hpp"

namespace nmn::trainer {

/// The first `steps` steps of each episode with their normalised advantages.
struct ActorBatch {
  std::span<const envs::History> histories;
  std::span<const std::vector<double>> advantages;
  std::size_t steps = 0;
};

/// Gaussian parameters of the policy being improved (theta_k), per episode,
/// flattened as steps * m.
struct PolicySnapshot {
  std::vector<std::vector<double>> mu;
  std::vector<std::vector<double>> sigma;
};

PolicySnapshot snapshot_policy(const models::Model& actor, const ActorBatch& batch,
                               core::ExecPolicy exec = core::ExecPolicy::Serial);

struct ActorLossTerms {
  double loss = 0.0;
  double vanilla = 0.0;  // -avg(ratio * A)
  double d = 0.0;        // avg KL(snapshot || current)
  double hinge = 0.0;    // max(0, d - 2 d_targ)^2
};

/// Scratch kept across epochs so tapes and gradient buffers reuse memory.
struct ActorWorkspace {
  std::vector<core::Tape> tapes;
  std::vector<core::GradientSet> grads;
};

/// Loss = vanilla + beta d + eta hinge. With `grad` non-null, also writes
/// d loss / d theta (overwriting) using truncated BPTT with window hp.T.
ActorLossTerms actor_loss(const models::Model& actor, const ActorBatch& batch,
                          const PolicySnapshot& snapshot, double beta, const HyperParams& hp,
                          core::GradientSet* grad, ActorWorkspace* ws = nullptr,
                          core::ExecPolicy exec = core::ExecPolicy::Serial);

struct ActorUpdateReport {
  std::size_t epochs = 0;
  bool early_stop = false;
  double d = 0.0;            // KL of the last epoch, fed to update_beta_lr
  double first_loss = 0.0;
  double last_loss = 0.0;
  std::vector<double> epoch_d;
};

/// Up to e_actor Adam epochs on actor_loss. Adam step indices are
/// k * e_actor + m + 1. If an epoch's pre-step KL exceeds d_thresh * d_targ the
/// parameters revert to theta_k and the loop stops; moments are kept. Ends
/// with update_beta_lr on the last KL. Throws NumericError on a non-finite loss.
ActorUpdateReport actor_update(models::Model& actor, const ActorBatch& batch,
                               AdaptiveState& state, const HyperParams& hp,
                               ActorWorkspace& ws,
                               core::ExecPolicy exec = core::ExecPolicy::Serial);

/// Adaptive KL weight and the coupled learning-rate change, using the
/// pre-update beta for the learning-rate test. Throws ContractError if d < 0.
void update_beta_lr(double d, AdaptiveState& state, const HyperParams& hp);

}  // namespace nmn::trainer
