// Serial reference against the OpenMP episode-parallel path. The argument is
// the ExecPolicy (0 = serial, 1 = openmp); results are identical by design,
// so only the timing differs.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "nmn/core/parallel.hpp"
#include "nmn/envs/runner.hpp"
#include "nmn/models/model.hpp"
#include "nmn/oracle/bench1_oracle.hpp"
#include "nmn/trainer/actor.hpp"
#include "nmn/trainer/advantage.hpp"
#include "nmn/trainer/rollout.hpp"

using namespace nmn;

namespace {

core::ExecPolicy policy(const benchmark::State& state) {
  return state.range(0) == 0 ? core::ExecPolicy::Serial : core::ExecPolicy::OpenMP;
}

void BM_RunEpisodes(benchmark::State& state) {
  const models::Model actor({1, models::Variant::NMN}, 1);
  const trainer::ModelPolicyFactory f(actor, nullptr, false);
  envs::RunSpec spec;
  spec.episodes = 16;
  spec.steps = 200;
  spec.exec = policy(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(envs::run_episodes(f, spec));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.episodes * spec.steps));
}

void BM_ActorLossGradient(benchmark::State& state) {
  const models::Model actor({1, models::Variant::NMN}, 2);
  trainer::HyperParams hp;
  hp.L = 200;
  hp.L_prime = 160;
  hp.T = 50;
  const trainer::ModelPolicyFactory f(actor, nullptr, false);
  envs::RunSpec spec;
  spec.episodes = 16;
  spec.steps = hp.L;
  const auto hs = envs::run_episodes(f, spec);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> adv(hs.size(), std::vector<double>(hp.L));
  for (auto& e : adv) {
    for (auto& v : e) v = n(rng);
  }
  const trainer::ActorBatch batch{hs, adv, hp.L_prime};
  const auto exec = policy(state);
  const auto snap = trainer::snapshot_policy(actor, batch, exec);
  core::GradientSet g(actor.params());
  trainer::ActorWorkspace ws;
  for (auto _ : state) {
    benchmark::DoNotOptimize(trainer::actor_loss(actor, batch, snap, 1.0, hp, &g, &ws, exec));
  }
}

void BM_OracleMonteCarlo(benchmark::State& state) {
  oracle::McConfig c;
  c.episodes = 20000;
  c.exec = policy(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::mc_return(c));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.episodes));
}

}  // namespace

BENCHMARK(BM_RunEpisodes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ActorLossGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
