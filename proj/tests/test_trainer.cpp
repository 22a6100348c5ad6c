#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "nmn/core/adam.hpp"
#include "nmn/core/errors.hpp"
#include "nmn/envs/runner.hpp"
#include "nmn/models/gaussian.hpp"
#include "nmn/models/model.hpp"
#include "nmn/trainer/actor.hpp"
#include "nmn/trainer/advantage.hpp"
#include "nmn/trainer/critic.hpp"
#include "nmn/trainer/rollout.hpp"
#include "nmn/trainer/train.hpp"
#include "test_util.hpp"

using namespace nmn;
using namespace nmn::trainer;
using nmn::testing::central_diff;
using nmn::testing::rel_err;
using nmn::testing::uniform_vec;

TEST(Td, ScaledBellmanFixedPoint) {
  const double gamma = 0.998, r = 10.0;
  // c* solves (1 - gamma) r + gamma c - c = 0, i.e. c* = r.
  const std::vector<double> rewards(20, r);
  const std::vector<double> values(21, r);
  for (double v : compute_td(rewards, values, gamma)) EXPECT_NEAR(v, 0.0, 1e-12);
  for (double v : compute_td(std::vector<double>(5, 0.0), std::vector<double>(6, 0.0), gamma)) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Td, MatchesDirectFormula) {
  std::mt19937_64 rng(1);
  const auto r = uniform_vec(50, rng, -10, 10);
  const auto c = uniform_vec(51, rng, -5, 5);
  const auto td = compute_td(r, c, 0.9);
  for (std::size_t j = 0; j < r.size(); ++j) {
    EXPECT_NEAR(td[j], 0.1 * r[j] + 0.9 * c[j + 1] - c[j], 1e-12);
  }
  EXPECT_THROW(compute_td(r, r, 0.9), DimensionError);
}

TEST(Gae, Examples) {
  const std::vector<double> td{1.0, 1.0};
  const auto g = compute_gae(td, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(g[0], 1.5);
  EXPECT_DOUBLE_EQ(g[1], 1.0);
  std::mt19937_64 rng(2);
  const auto t = uniform_vec(30, rng);
  EXPECT_EQ(compute_gae(t, 0.99, 0.0), t);
}

TEST(Gae, RecursionEqualsDirectSum) {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 17u, 200u, 1000u}) {
    const auto td = uniform_vec(n, rng, -3, 3);
    const double gl = 0.998 * 0.98;
    const auto g = compute_gae(td, 0.998, 0.98);
    for (std::size_t j = 0; j < n; j += 7) {
      double s = 0.0;
      for (std::size_t t = j; t < n; ++t) s += std::pow(gl, static_cast<double>(t - j)) * td[t];
      EXPECT_NEAR(g[j], s, 1e-10);
    }
  }
}

TEST(Normalize, Examples) {
  std::vector<std::vector<double>> b{{1.0, 2.0, 3.0}};
  const auto st = normalize_advantages(b, 3);
  EXPECT_DOUBLE_EQ(st.mean, 2.0);
  EXPECT_NEAR(b[0][0] + b[0][1] + b[0][2], 0.0, 1e-15);
  double ss = 0.0;
  for (double v : b[0]) ss += v * v;
  EXPECT_NEAR(ss / 3.0, 1.0, 1e-15);

  std::vector<std::vector<double>> flat{{4.0, 4.0}, {4.0, 4.0}};
  EXPECT_TRUE(normalize_advantages(flat, 2).degenerate);
  for (const auto& e : flat) EXPECT_EQ(e, (std::vector<double>{0.0, 0.0}));
  std::vector<std::vector<double>> empty;
  EXPECT_THROW(normalize_advantages(empty, 1), ContractError);
}

TEST(Normalize, PrefixStatisticsAndAffineInvariance) {
  std::mt19937_64 rng(4);
  std::vector<std::vector<double>> a, b;
  for (int i = 0; i < 8; ++i) {
    a.push_back(uniform_vec(40, rng, -20, 20));
    b.push_back(a.back());
    for (auto& v : b.back()) v = 3.5 * v - 7.0;
  }
  const auto tail = a[0][35];
  normalize_advantages(a, 30);
  normalize_advantages(b, 30);
  EXPECT_EQ(a[0][35], tail);
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < 30; ++j) {
      s += a[i][j];
      ss += a[i][j] * a[i][j];
      EXPECT_NEAR(a[i][j], b[i][j], 1e-12);
    }
  }
  EXPECT_NEAR(s / 240.0, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(ss / 240.0), 1.0, 1e-6);
}

TEST(Kl, ClosedFormAndAsymmetry) {
  EXPECT_DOUBLE_EQ(models::kl_diag_gaussian({{0.0}, {1.0}}, {{1.0}, {1.0}}), 0.5);
  const models::GaussianPolicyOutput p{{0.0}, {1.0}}, q{{0.0}, {2.0}};
  // 0.5 (1/4 - 1 + ln 4) versus 0.5 (4 - 1 - ln 4).
  EXPECT_NEAR(models::kl_diag_gaussian(p, q), 0.5 * (0.25 - 1.0 + std::log(4.0)), 1e-15);
  EXPECT_NEAR(models::kl_diag_gaussian(q, p), 0.5 * (4.0 - 1.0 - std::log(4.0)), 1e-15);
}

TEST(BetaLr, Examples) {
  HyperParams hp;
  AdaptiveState s{1.0, 2e-4, 0};
  update_beta_lr(0.01, s, hp);
  EXPECT_DOUBLE_EQ(s.beta, 1.5);
  EXPECT_DOUBLE_EQ(s.a_lr, 2e-4);
  s = {1.0 / 30.0, 2e-4, 0};
  update_beta_lr(1e-4, s, hp);
  EXPECT_DOUBLE_EQ(s.beta, 1.0 / 30.0);
  EXPECT_DOUBLE_EQ(s.a_lr, 3e-4);
  s = {2.0, 2e-4, 0};
  update_beta_lr(0.003, s, hp);
  EXPECT_DOUBLE_EQ(s.beta, 2.0);
  EXPECT_DOUBLE_EQ(s.a_lr, 2e-4);
  s = {29.0, 3e-4, 0};
  update_beta_lr(0.5, s, hp);
  EXPECT_DOUBLE_EQ(s.beta, 30.0);
  EXPECT_DOUBLE_EQ(s.a_lr, 2e-4);
  EXPECT_THROW(update_beta_lr(-1.0, s, hp), ContractError);
}

TEST(BetaLr, FuzzStaysInRange) {
  HyperParams hp;
  AdaptiveState s = initial_adaptive_state(hp);
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> d(1.0 / hp.d_targ);
  for (int i = 0; i < 100000; ++i) {
    update_beta_lr(d(rng), s, hp);
    ASSERT_GE(s.beta, hp.beta_min);
    ASSERT_LE(s.beta, hp.beta_max);
  }
}

TEST(CriticTargets, Examples) {
  const double g = 0.998;
  const auto d = critic_targets(std::vector<double>(500, 10.0), g);
  EXPECT_NEAR(d[0], 10.0 * (1.0 - std::pow(g, 500.0)), 1e-10);
  for (double v : critic_targets(std::vector<double>(9, 0.0), g)) EXPECT_EQ(v, 0.0);
  std::mt19937_64 rng(6);
  const auto r = uniform_vec(300, rng, -10, 10);
  const auto t = critic_targets(r, g);
  for (std::size_t j = 0; j < r.size(); j += 13) {
    double s = 0.0;
    for (std::size_t k = j; k < r.size(); ++k) s += std::pow(g, double(k - j)) * (1 - g) * r[k];
    EXPECT_NEAR(t[j], s, 1e-10);
  }
}

TEST(Chunks, PartitionExample) {
  const auto c = chunk_bounds(500, 200);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], (std::pair<std::size_t, std::size_t>{0, 199}));
  EXPECT_EQ(c[1], (std::pair<std::size_t, std::size_t>{200, 399}));
  EXPECT_EQ(c[2], (std::pair<std::size_t, std::size_t>{400, 499}));
  HyperParams hp;
  // 150 chunks of a full replay at the defaults: ceil(150 / (25 * 200)) = 1.
  EXPECT_EQ(critic_iterations(150, hp), 10u);
  EXPECT_EQ(critic_iterations(5001, hp), 20u);
}

TEST(Adam, ScalarQuadraticDescentIsMonotone) {
  // One-parameter critic c = psi regressed on a constant target 0.5.
  core::ParameterStore p;
  p.add("psi", 1, 1);
  core::GradientSet g(p);
  double gap = 0.5;
  for (std::size_t step = 1; step <= 300; ++step) {
    g[0][0] = 2.0 * (p.value(0)[0] - 0.5);
    core::adam_step(p, g, 1e-3, step, {});
    const double now = std::abs(p.value(0)[0] - 0.5);
    ASSERT_LT(now, gap);
    gap = now;
  }
}

namespace {

struct Fixture {
  HyperParams hp;
  models::Model actor;
  std::vector<envs::History> hs;
  std::vector<std::vector<double>> adv;

  explicit Fixture(int benchmark = 1, std::size_t episodes = 3, std::size_t steps = 12)
      : actor(models::ModelConfig{benchmark, models::Variant::NMN}, 17) {
    hp.L = steps;
    hp.L_prime = steps - 2;
    hp.T = 4;
    const ModelPolicyFactory f(actor, nullptr, false);
    envs::RunSpec spec;
    spec.benchmark = benchmark;
    spec.episodes = episodes;
    spec.steps = steps;
    spec.master_seed = 3;
    hs = envs::run_episodes(f, spec);
    std::mt19937_64 rng(9);
    for (std::size_t i = 0; i < episodes; ++i) adv.push_back(uniform_vec(steps, rng, -2, 2));
    normalize_advantages(adv, hp.L_prime);
  }
  [[nodiscard]] ActorBatch batch() const { return {hs, adv, hp.L_prime}; }
};

}  // namespace

TEST(ActorLoss, ZeroAtSnapshot) {
  Fixture fx;
  const auto snap = snapshot_policy(fx.actor, fx.batch());
  const auto t = actor_loss(fx.actor, fx.batch(), snap, 1.0, fx.hp, nullptr);
  EXPECT_NEAR(t.loss, 0.0, 1e-12);
  EXPECT_EQ(t.d, 0.0);
  EXPECT_EQ(t.hinge, 0.0);
}

TEST(ActorLoss, HingeValue) {
  const double d = 0.01, targ = 0.003, eta = 50.0;
  const double hinge = std::pow(std::max(0.0, d - 2 * targ), 2.0);
  EXPECT_NEAR(eta * hinge, 8e-4, 1e-15);
  // The same term through the loss: move away from the snapshot and compare.
  Fixture fx;
  const auto snap = snapshot_policy(fx.actor, fx.batch());
  for (std::size_t i = 0; i < fx.actor.params().size(); ++i) {
    for (auto& v : fx.actor.params().value(i).flat()) v *= 1.3;
  }
  fx.hp.d_targ = 1e-5;
  const auto t = actor_loss(fx.actor, fx.batch(), snap, 0.7, fx.hp, nullptr);
  EXPECT_NEAR(t.hinge, std::pow(std::max(0.0, t.d - 2e-5), 2.0), 1e-15);
  EXPECT_NEAR(t.loss, t.vanilla + 0.7 * t.d + fx.hp.eta * t.hinge, 1e-12);
}

TEST(ActorLoss, GradientMatchesFiniteDifferences) {
  // Fresh networks have zero biases, which puts ReLU pre-activations exactly on
  // the kink at t = 0; jitter every parameter first so finite differences see
  // a smooth neighbourhood.
  auto jitter = [](models::Model& m, std::uint64_t seed, double sd) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      for (auto& v : m.params().value(i).flat()) v += n(rng);
    }
  };
  for (bool at_snapshot : {true, false}) {
    Fixture fx(1, 2, 10);
    // A window covering the whole prefix makes the truncated gradient exact.
    fx.hp.T = 1000;
    jitter(fx.actor, 11, 0.05);
    const auto snap = snapshot_policy(fx.actor, fx.batch());
    if (!at_snapshot) {
      jitter(fx.actor, 12, 0.02);
      fx.hp.d_targ = 1e-6;
    }
    core::GradientSet g(fx.actor.params());
    actor_loss(fx.actor, fx.batch(), snap, 0.8, fx.hp, &g);
    const auto flat = g.flatten();
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
    int checked = 0;
    for (int probe = 0; probe < 40; ++probe) {
      const std::size_t i = pick(rng);
      if (std::abs(flat[i]) < 1e-7) continue;
      const double num = central_diff(fx.actor.params(), i, [&] {
        return actor_loss(fx.actor, fx.batch(), snap, 0.8, fx.hp, nullptr).loss;
      });
      EXPECT_LT(rel_err(flat[i], num), 1e-4) << "parameter " << i << " snapshot " << at_snapshot << " analytic " << flat[i] << " numeric " << num;
      ++checked;
    }
    EXPECT_GT(checked, 10);
  }
}

TEST(ActorLoss, OpenMpMatchesSerial) {
  Fixture fx(2, 4, 10);
  const auto snap = snapshot_policy(fx.actor, fx.batch());
  for (std::size_t i = 0; i < fx.actor.params().size(); ++i) {
    for (auto& v : fx.actor.params().value(i).flat()) v *= 1.01;
  }
  core::GradientSet a(fx.actor.params()), b(fx.actor.params());
  const auto ta = actor_loss(fx.actor, fx.batch(), snap, 1.0, fx.hp, &a, nullptr, core::ExecPolicy::Serial);
  const auto tb = actor_loss(fx.actor, fx.batch(), snap, 1.0, fx.hp, &b, nullptr, core::ExecPolicy::OpenMP);
  EXPECT_EQ(ta.loss, tb.loss);
  EXPECT_EQ(a.flatten(), b.flatten());
}

TEST(ActorUpdate, ZeroAdvantagesLeaveParametersUnchanged) {
  Fixture fx;
  for (auto& e : fx.adv) std::fill(e.begin(), e.end(), 0.0);
  fx.hp.e_actor = 5;
  const auto before = fx.actor.params().flatten();
  AdaptiveState st = initial_adaptive_state(fx.hp);
  ActorWorkspace ws;
  const auto rep = actor_update(fx.actor, fx.batch(), st, fx.hp, ws);
  EXPECT_EQ(rep.epochs, 5u);
  EXPECT_FALSE(rep.early_stop);
  EXPECT_EQ(before, fx.actor.params().flatten());
}

TEST(ActorUpdate, ForcedRevertRestoresSnapshotBitwise) {
  Fixture fx;
  fx.hp.d_thresh = 1e-12;
  fx.hp.a_lr0 = 1e-2;
  const auto before = fx.actor.params().flatten();
  AdaptiveState st = initial_adaptive_state(fx.hp);
  ActorWorkspace ws;
  const auto rep = actor_update(fx.actor, fx.batch(), st, fx.hp, ws);
  EXPECT_TRUE(rep.early_stop);
  EXPECT_EQ(rep.epochs, 2u);
  EXPECT_EQ(before, fx.actor.params().flatten());
  // Adam moments survive the revert.
  bool nonzero = false;
  for (const auto& e : fx.actor.params().entries()) {
    for (double v : e.moment_z.flat()) nonzero |= v != 0.0;
  }
  EXPECT_TRUE(nonzero);
}

TEST(ActorUpdate, EpochKlBelowThresholdUnlessFlagged) {
  Fixture fx(1, 4, 12);
  fx.hp.e_actor = 10;
  AdaptiveState st = initial_adaptive_state(fx.hp);
  ActorWorkspace ws;
  const auto rep = actor_update(fx.actor, fx.batch(), st, fx.hp, ws);
  for (std::size_t m = 0; m < rep.epoch_d.size(); ++m) {
    const bool last = m + 1 == rep.epoch_d.size();
    if (!(last && rep.early_stop)) EXPECT_LE(rep.epoch_d[m], fx.hp.d_thresh * fx.hp.d_targ);
  }
}

namespace {

std::shared_ptr<const std::vector<envs::History>> histories(int benchmark, std::size_t n,
                                                            std::size_t steps) {
  models::Model actor({benchmark, models::Variant::NMN}, 5);
  const ModelPolicyFactory f(actor, nullptr, false);
  envs::RunSpec spec;
  spec.benchmark = benchmark;
  spec.episodes = n;
  spec.steps = steps;
  return std::make_shared<const std::vector<envs::History>>(envs::run_episodes(f, spec));
}

models::Model critic_model(std::uint64_t seed) {
  models::ModelConfig c{1, models::Variant::NMN};
  c.head = models::Head::Critic;
  return models::Model(c, seed);
}

}  // namespace

TEST(Critic, GlobalMinimumLeavesParametersUnchanged) {
  auto critic = critic_model(6);
  // Zero the output layer so the critic predicts 0 everywhere.
  const auto& out = std::get<core::NeuromodDenseLayer>(critic.layers().back());
  critic.params().value(out.weight).fill(0.0);
  critic.params().value(out.scale).fill(0.0);
  critic.params().value(out.offset).fill(0.0);
  HyperParams hp;
  hp.L = 10;
  hp.L_prime = 10;
  hp.T = 4;
  hp.cmb = 3;
  CriticReplayBuffer rb(3);
  const auto h = histories(1, 2, 10);
  rb.push({h, std::vector<std::vector<double>>(2, std::vector<double>(10, 0.0))});
  const auto before = critic.params().flatten();
  std::mt19937_64 rng(1);
  CriticWorkspace ws;
  const auto rep = critic_update(critic, rb, 0, hp, rng, ws);
  EXPECT_EQ(rep.first_loss, 0.0);
  EXPECT_EQ(before, critic.params().flatten());
}

TEST(Critic, UpdateReducesLossAndEmptyReplayFails) {
  auto critic = critic_model(7);
  HyperParams hp;
  hp.L = 16;
  hp.L_prime = 12;
  hp.T = 4;
  hp.cmb = 3;
  hp.e_critic = 30;
  CriticReplayBuffer rb(3);
  std::mt19937_64 rng(2);
  CriticWorkspace ws;
  EXPECT_THROW(critic_update(critic, rb, 0, hp, rng, ws), ContractError);
  const auto h = histories(1, 3, 16);
  std::vector<std::vector<double>> targets(3, std::vector<double>(16, 0.5));
  rb.push({h, targets});
  const auto chunks = partition_chunks(rb, hp.L_prime, hp.T);
  EXPECT_EQ(chunks.size(), 9u);
  const double before = critic_loss(critic, rb, chunks, hp, nullptr);
  critic_update(critic, rb, 0, hp, rng, ws);
  EXPECT_LT(critic_loss(critic, rb, chunks, hp, nullptr), before);
}

TEST(Critic, GradientMatchesFiniteDifferences) {
  auto critic = critic_model(8);
  HyperParams hp;
  hp.L = 10;
  hp.L_prime = 9;
  hp.T = 9;
  CriticReplayBuffer rb(3);
  std::mt19937_64 rng(3);
  std::vector<std::vector<double>> targets{uniform_vec(10, rng), uniform_vec(10, rng)};
  rb.push({histories(1, 2, 10), targets});
  const auto chunks = partition_chunks(rb, hp.L_prime, hp.T);
  core::GradientSet g(critic.params());
  critic_loss(critic, rb, chunks, hp, &g);
  const auto flat = g.flatten();
  std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
  for (int probe = 0; probe < 30; ++probe) {
    const std::size_t i = pick(rng);
    if (std::abs(flat[i]) < 1e-7) continue;
    const double num = central_diff(critic.params(), i,
                                    [&] { return critic_loss(critic, rb, chunks, hp, nullptr); });
    EXPECT_LT(rel_err(flat[i], num), 1e-4) << "parameter " << i;
  }
}

TEST(ReplayBuffer, EvictsOldest) {
  CriticReplayBuffer rb(2);
  for (int i = 0; i < 3; ++i) {
    rb.push({histories(1, 1, 3), {std::vector<double>(3, double(i))}});
  }
  EXPECT_EQ(rb.size(), 2u);
  EXPECT_EQ(rb[0].targets[0][0], 1.0);
}

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.model = {1, models::Variant::NMN};
  c.hp.B = 50;
  c.hp.E = 100;
  c.hp.L = 20;
  c.hp.L_prime = 16;
  c.hp.T = 8;
  c.hp.e_actor = 3;
  c.hp.e_critic = 2;
  c.hp.cmb = 5;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Train, BudgetGivesTwoIterationsAndIsReproducible) {
  const auto c = small_config();
  std::size_t calls = 0;
  const auto a = train(c, [&](const UpdateMetrics&) { ++calls; });
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(a.updates.size(), 2u);
  EXPECT_EQ(a.returns.size(), 100u);
  auto c2 = c;
  c2.exec = core::ExecPolicy::OpenMP;
  const auto b = train(c2);
  EXPECT_EQ(a.returns, b.returns);
  EXPECT_EQ(a.actor.params().flatten(), b.actor.params().flatten());
  EXPECT_EQ(a.critic.params().flatten(), b.critic.params().flatten());
  EXPECT_EQ(a.smoothed, running_mean(a.returns, kSmoothingWindow));
}

TEST(Train, RunningMeanWindow) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(running_mean(v, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
}

TEST(Train, HyperParameterValidation) {
  HyperParams hp;
  hp.L_prime = hp.L + 1;
  EXPECT_THROW(hp.validate(), ConfigError);
  EXPECT_THROW(hyperparams_from_json({{"bogus", 1}}), ConfigError);
  EXPECT_EQ(hyperparams_from_json({{"T", 5}}).T, 5u);
}

TEST(Train, SmallerBudgetIsPrefixOfLargerOne) {
  auto c = small_config();
  const auto shorter = train(c);
  c.hp.E = 150;
  const auto longer = train(c);
  ASSERT_EQ(longer.returns.size(), 150u);
  EXPECT_TRUE(std::equal(shorter.returns.begin(), shorter.returns.end(), longer.returns.begin()));
  EXPECT_TRUE(std::equal(shorter.smoothed.begin(), shorter.smoothed.end(), longer.smoothed.begin()));
}
