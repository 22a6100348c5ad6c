#include "nmn/trainer/rollout.hpp"

#include <algorithm>

namespace nmn::trainer {

namespace {

class ModelPolicy : public envs::EpisodePolicy {
 public:
  ModelPolicy(const models::Model& actor, const models::Model* critic, bool greedy,
              models::ActionBounds bounds, double sigma_floor)
      : actor_(actor),
        critic_(critic),
        greedy_(greedy),
        bounds_(bounds),
        sigma_floor_(sigma_floor),
        actor_state_(actor.initial_state()),
        head_(actor.output_dim()) {
    if (critic_ != nullptr) {
      critic_state_ = critic_->initial_state();
    }
  }

  void act(std::span<const double> feedback, std::span<const double> obs, envs::Rng& rng,
           envs::StepRecord& out) override {
    out.z.resize(actor_.signal_dim());
    actor_.step(feedback, obs, actor_state_, head_, out.z);
    auto g = models::gaussian_from_head(head_, sigma_floor_);
    if (greedy_) {
      out.raw = g.mu;
      out.action = g.mu;
      for (auto& a : out.action) {
        a = std::clamp(a, bounds_.low, bounds_.high);
      }
    } else {
      auto s = models::sample_action(g, bounds_, rng);
      out.raw = std::move(s.raw);
      out.action = std::move(s.action);
    }
    out.mu = std::move(g.mu);
    out.sigma = std::move(g.sigma);
    out.has_value = value(feedback, obs, out.value);
  }

  bool terminal_value(std::span<const double> feedback, std::span<const double> obs,
                      double& v) override {
    return value(feedback, obs, v);
  }

 private:
  bool value(std::span<const double> feedback, std::span<const double> obs, double& v) {
    if (critic_ == nullptr) {
      return false;
    }
    critic_->step(feedback, obs, critic_state_, {&v, 1});
    return true;
  }

  const models::Model& actor_;
  const models::Model* critic_;
  bool greedy_;
  models::ActionBounds bounds_;
  double sigma_floor_;
  models::RecurrentState actor_state_;
  models::RecurrentState critic_state_;
  std::vector<double> head_;
};

}  // namespace

ModelPolicyFactory::ModelPolicyFactory(const models::Model& actor, const models::Model* critic,
                                       bool greedy, double sigma_floor)
    : actor_(actor), critic_(critic), greedy_(greedy), sigma_floor_(sigma_floor) {}

std::unique_ptr<envs::EpisodePolicy> ModelPolicyFactory::start_episode(
    const envs::TaskSample& task) const {
  return std::make_unique<ModelPolicy>(actor_, critic_, greedy_,
                                       envs::action_bounds(task.benchmark), sigma_floor_);
}

}  // namespace nmn::trainer
