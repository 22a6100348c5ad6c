#pragma once

#include <cstddef>

namespace nmn::trainer {

struct HyperParams {
  std::size_t B = 50;          // episodes per update
  double lambda = 0.98;        // GAE decay
  double gamma = 0.998;
  double beta0 = 1.0;
  double beta_min = 1.0 / 30.0;
  double beta_max = 30.0;
  double d_targ = 0.003;
  double a_lr0 = 2e-4;
  double omega1 = 0.9;
  double omega2 = 0.999;
  double epsilon = 1e-8;
  std::size_t e_actor = 20;
  std::size_t crb = 2;         // previous batches kept for the critic
  std::size_t cmb = 25;        // chunks per critic minibatch
  double c_lr = 6e-3;
  std::size_t T = 200;         // truncation window and critic chunk length
  std::size_t e_critic = 10;
  double eta = 50.0;           // squared-hinge weight
  std::size_t L = 500;         // steps per episode
  std::size_t L_prime = 400;   // leading steps used in the losses
  double d_thresh = 4.0;       // early stop when d > d_thresh * d_targ
  std::size_t E = 20000;       // total episode budget

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

/// beta_k, the actor learning rate and the update counter.
struct AdaptiveState {
  double beta = 1.0;
  double a_lr = 2e-4;
  std::size_t k = 0;
};

AdaptiveState initial_adaptive_state(const HyperParams& hp);

}  // namespace nmn::trainer
