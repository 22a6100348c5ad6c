#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "nmn/envs/benchmarks.hpp"
#include "nmn/envs/runner.hpp"
#include "nmn/models/model.hpp"
#include "nmn/trainer/rollout.hpp"

using namespace nmn;
using namespace nmn::envs;

TEST(SampleTask, Bench1Distribution) {
  Rng rng(1);
  double sum = 0.0, lo = 1e9, hi = -1e9;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double a = sample_task(1, rng).alpha.at(0);
    sum += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  EXPECT_NEAR(sum / n, 0.0, 0.1);
  EXPECT_GE(lo, -10.0);
  EXPECT_LE(hi, 10.0);
}

TEST(SampleTask, Bench3SignIsFair) {
  Rng rng(2);
  int plus = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double a5 = sample_task(3, rng).alpha.at(4);
    ASSERT_TRUE(a5 == 1.0 || a5 == -1.0);
    plus += a5 > 0;
  }
  EXPECT_NEAR(static_cast<double>(plus) / n, 0.5, 0.01);
}

TEST(SampleTask, ReplayIsIdentical) {
  for (int b = 1; b <= 3; ++b) {
    Rng r1(7), r2(7);
    EXPECT_EQ(sample_task(b, r1).alpha, sample_task(b, r2).alpha);
    const auto t = sample_task(b, r1);
    sample_task(b, r2);
    EXPECT_EQ(reset(t, r1).obs, reset(t, r2).obs);
  }
}

TEST(Reset, Bench1ObservationInRange) {
  Rng rng(3);
  const TaskSample t{1, {10.0}};
  for (int i = 0; i < 10000; ++i) {
    const auto s = reset(t, rng);
    ASSERT_GE(s.p, -15.0);
    ASSERT_LE(s.p, -5.0);
    ASSERT_DOUBLE_EQ(s.obs[0], s.p + 10.0);
  }
}

TEST(Reset, Bench3ObservationLayout) {
  Rng rng(4);
  const TaskSample t{3, {0.1, 0.2, -0.3, 0.4, 1.0}};
  const auto s = reset(t, rng);
  ASSERT_EQ(s.obs.size(), 4u);
  EXPECT_DOUBLE_EQ(s.obs[0], 0.1 - s.ux);
  EXPECT_DOUBLE_EQ(s.obs[1], 0.2 - s.uy);
  EXPECT_DOUBLE_EQ(s.obs[2], -0.3 - s.ux);
  EXPECT_DOUBLE_EQ(s.obs[3], 0.4 - s.uy);
  EXPECT_LE(std::abs(s.ux), 1.5);
  EXPECT_LE(std::abs(s.uy), 1.5);
}

TEST(Bench1Step, Examples) {
  Rng rng(5);
  const TaskSample t{1, {2.0}};
  auto s = reset(t, rng);
  const double p = s.p;
  EXPECT_EQ(bench1_step(s, p + 3.0, t, rng), -3.0);
  EXPECT_EQ(s.p, p);
  EXPECT_EQ(bench1_step(s, p + 1.0, t, rng), -1.0);
  EXPECT_EQ(s.p, p);
  EXPECT_EQ(bench1_step(s, p, t, rng), 10.0);
  EXPECT_GE(s.p, -7.0);
  EXPECT_LE(s.p, 3.0);
  EXPECT_DOUBLE_EQ(s.obs[0], s.p + 2.0);
}

TEST(Bench2Step, HitResamplesPosition) {
  Rng rng(6);
  const TaskSample t{2, {0.5, -0.5, 1.0}};
  auto s = reset(t, rng);
  s.ux = 0.5;
  s.uy = -0.5;
  EXPECT_EQ(bench2_step(s, 0.0, t, rng), 100.0);
  EXPECT_LE(std::abs(s.ux), 1.5);
  EXPECT_LE(std::abs(s.uy), 1.5);
  EXPECT_DOUBLE_EQ(s.obs[0], 0.5 - s.ux);
}

TEST(Wrap, Examples) {
  EXPECT_DOUBLE_EQ(wrap(2.45), 2.45 - 4.0);
  EXPECT_DOUBLE_EQ(wrap(-2.3), -2.3 + 4.0);
  EXPECT_DOUBLE_EQ(wrap(1.0), 1.0);
  EXPECT_DOUBLE_EQ(wrap(2.0), 2.0);
}

TEST(Bench2Step, WindAlignedDisplacement) {
  // alpha3 = 0, a = 0: each term contributes cos(0) * 0.25 in y; the wind
  // noise averages over [-pi/4, pi/4].
  Rng rng(7);
  const TaskSample t{2, {1.9, 1.9, 0.0}};
  double dx = 0.0, dy = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    EnvState s{2, 0.0, -1.0, -1.0, {0.0, 0.0}};
    bench2_step(s, 0.0, t, rng);
    dx += s.ux + 1.0;
    dy += s.uy + 1.0;
  }
  // E cos(n) for n ~ U[-pi/4, pi/4] is sin(pi/4) / (pi/4).
  const double wind = std::sin(std::numbers::pi / 4) / (std::numbers::pi / 4);
  EXPECT_NEAR(dx / n, 0.0, 0.005);
  EXPECT_NEAR(dy / n, 0.25 * (1.0 + wind), 0.005);
  EXPECT_LE(dy / n, 0.5);
}

TEST(Bench2Step, WindAlignedActionMovesFastest) {
  const TaskSample t{2, {1.9, 1.9, 0.7}};
  auto mean_len = [&](double a) {
    Rng rng(8);
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < 20000; ++i) {
      EnvState s{2, 0.0, -1.0, -1.0, {0.0, 0.0}};
      bench2_step(s, a, t, rng);
      sx += s.ux + 1.0;
      sy += s.uy + 1.0;
    }
    return std::hypot(sx, sy) / 20000.0;
  };
  EXPECT_GT(mean_len(0.7), mean_len(0.7 + std::numbers::pi / 2));
}

TEST(Bench3Step, RewardRouting) {
  const TaskSample plus{3, {0.0, 0.0, 1.0, 1.0, 1.0}};
  const TaskSample minus{3, {0.0, 0.0, 1.0, 1.0, -1.0}};
  EXPECT_EQ(bench3_reward(0.1, 0.0, plus), 100.0);
  EXPECT_EQ(bench3_reward(0.1, 0.0, minus), -50.0);
  EXPECT_EQ(bench3_reward(1.0, 1.1, plus), -50.0);
  EXPECT_EQ(bench3_reward(1.0, 1.1, minus), 100.0);
  EXPECT_EQ(bench3_reward(-1.0, -1.0, plus), 0.0);
  // Overlapping targets, closer to target 2.
  const TaskSample overlap{3, {0.0, 0.0, 0.5, 0.0, 1.0}};
  EXPECT_EQ(bench3_reward(0.3, 0.0, overlap), -50.0);
  EXPECT_EQ(bench3_reward(0.2, 0.0, overlap) != 0.0, true);
  EnvOptions literal;
  literal.bench3_literal_routing = true;
  EXPECT_EQ(bench3_reward(0.1, 0.0, minus, literal), -100.0);
  EXPECT_EQ(bench3_reward(1.0, 1.1, minus, literal), 50.0);
}

TEST(Bench3Step, QuarterAngleDisplacement) {
  Rng rng(9);
  const TaskSample t{3, {1.9, 1.9, 1.9, -1.9, 1.0}};
  EnvState s{3, 0.0, 0.0, 0.0, std::vector<double>(4)};
  EXPECT_EQ(bench3_step(s, 0.5, t, rng), 0.0);
  EXPECT_NEAR(s.ux, 0.25, 1e-15);
  EXPECT_NEAR(s.uy, 0.0, 1e-15);
}

TEST(Fuzz, Bench1ObservationBound) {
  Rng rng(10);
  std::uniform_real_distribution<double> act(-20.0, 20.0);
  std::size_t steps = 0;
  while (steps < 1000000) {
    const auto t = sample_task(1, rng);
    auto s = reset(t, rng);
    for (int i = 0; i < 1000; ++i, ++steps) {
      const double r = bench1_step(s, act(rng), t, rng);
      ASSERT_LE(r, 10.0);
      ASSERT_GE(s.obs[0], -5.0);
      ASSERT_LE(s.obs[0], 5.0);
    }
  }
}

TEST(Fuzz, Bench2And3CoordinatesAndRewards) {
  Rng rng(11);
  std::uniform_real_distribution<double> act(-1e3, 1e3);
  for (int b : {2, 3}) {
    for (int ep = 0; ep < 500; ++ep) {
      const auto t = sample_task(b, rng);
      auto s = reset(t, rng);
      for (int i = 0; i < 1000; ++i) {
        const double ux = s.ux, uy = s.uy;
        const double r = env_step(s, act(rng), t, rng);
        ASSERT_LE(std::abs(s.ux), 2.0);
        ASSERT_LE(std::abs(s.uy), 2.0);
        if (b == 2) {
          const bool inside = std::hypot(ux - t.alpha[0], uy - t.alpha[1]) <= kTargetRadius;
          ASSERT_EQ(r, inside ? 100.0 : -2.0);
        } else {
          ASSERT_TRUE(r == 0.0 || r == 100.0 || r == -50.0);
        }
      }
    }
  }
}

namespace {

// Plays the clipped constant action c every step.
class ConstantPolicy : public EpisodePolicy {
 public:
  explicit ConstantPolicy(double c) : c_(c) {}
  void act(std::span<const double>, std::span<const double>, Rng& rng, StepRecord& out) override {
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    const double a = c_ == 0.0 ? u(rng) : c_;
    out.action = {a};
    out.raw = {a};
    out.mu = {a};
    out.sigma = {1.0};
  }

 private:
  double c_;
};

class ConstantFactory : public PolicyFactory {
 public:
  explicit ConstantFactory(double c) : c_(c) {}
  [[nodiscard]] std::unique_ptr<EpisodePolicy> start_episode(const TaskSample&) const override {
    return std::make_unique<ConstantPolicy>(c_);
  }

 private:
  double c_;
};

}  // namespace

TEST(RunEpisodes, ShapesAndRewardBound) {
  const ConstantFactory f(0.0);
  RunSpec spec;
  spec.episodes = 50;
  spec.steps = 30;
  const auto hs = run_episodes(f, spec);
  ASSERT_EQ(hs.size(), 50u);
  for (const auto& h : hs) {
    EXPECT_EQ(h.steps(), 30u);
    EXPECT_EQ(h.a.size(), 30u);
    EXPECT_EQ(h.x.size(), 31u);
    for (double r : h.r) EXPECT_LE(r, 10.0);
  }
  std::vector<double> fb(3);
  hs[0].feedback(0, fb);
  EXPECT_EQ(fb, (std::vector<double>{0, 0, 0}));
  hs[0].feedback(5, fb);
  EXPECT_EQ(fb, (std::vector<double>{hs[0].x[4], hs[0].a[4], hs[0].r[4]}));
}

TEST(RunEpisodes, DeterministicAcrossExecutionPolicies) {
  models::Model actor({2, models::Variant::NMN}, 3);
  models::ModelConfig cc{2, models::Variant::NMN};
  cc.head = models::Head::Critic;
  models::Model critic(cc, 4);
  const trainer::ModelPolicyFactory f(actor, &critic, false);
  RunSpec spec;
  spec.benchmark = 2;
  spec.episodes = 6;
  spec.steps = 25;
  spec.master_seed = 42;
  const auto a = run_episodes(f, spec);
  spec.exec = core::ExecPolicy::OpenMP;
  const auto b = run_episodes(f, spec);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].a, b[i].a);
    EXPECT_EQ(a[i].r, b[i].r);
    EXPECT_EQ(a[i].value, b[i].value);
    EXPECT_EQ(a[i].z, b[i].z);
    EXPECT_EQ(a[i].value.size(), 26u);
  }
  std::ostringstream o1, o2;
  write_trajectories(o1, a, 0);
  write_trajectories(o2, b, 0);
  EXPECT_EQ(o1.str(), o2.str());
  EXPECT_NE(o1.str().find("\"alpha\""), std::string::npos);
}

TEST(RunEpisodes, EpisodeStreamsAreIndependent) {
  const ConstantFactory f(0.0);
  RunSpec spec;
  spec.episodes = 4;
  spec.steps = 10;
  const auto four = run_episodes(f, spec);
  spec.episodes = 2;
  const auto two = run_episodes(f, spec);
  EXPECT_EQ(four[1].x, two[1].x);
  EXPECT_NE(four[0].x, four[1].x);
}
