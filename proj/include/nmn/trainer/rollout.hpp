#pragma once

#include <memory>

#include "nmn/envs/runner.hpp"
#include "nmn/models/model.hpp"

namespace nmn::trainer {

/// Drives an actor (and optionally a critic) through the episode runner.
/// Sampled mode draws from the Gaussian head; greedy mode plays its mean.
/// The models are read-only here, so episodes may run concurrently.
class ModelPolicyFactory : public envs::PolicyFactory {
 public:
  ModelPolicyFactory(const models::Model& actor, const models::Model* critic, bool greedy,
                     double sigma_floor = models::kSigmaFloor);
  [[nodiscard]] std::unique_ptr<envs::EpisodePolicy> start_episode(
      const envs::TaskSample& task) const override;

 private:
  const models::Model& actor_;
  const models::Model* critic_;
  bool greedy_;
  double sigma_floor_;
};

}  // namespace nmn::trainer
