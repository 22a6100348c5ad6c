#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nmn/core/errors.hpp"
#include "nmn/harness/config.hpp"
#include "nmn/harness/csv.hpp"
#include "nmn/harness/freeze.hpp"
#include "nmn/harness/modulation.hpp"
#include "nmn/harness/plot.hpp"
#include "nmn/models/model.hpp"
#include "nmn/trainer/train.hpp"

using namespace nmn;
using namespace nmn::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nmn_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json tiny_run(const fs::path& out) {
  return {{"benchmark", 1},
          {"variant", "nmn"},
          {"seeds", {0, 1}},
          {"output_dir", out.string()},
          {"hp", {{"E", 100}, {"L", 12}, {"L_prime", 10}, {"T", 5}, {"e_actor", 2}, {"e_critic", 1}, {"cmb", 4}}}};
}

}  // namespace

TEST(Config, OverlayPrecedenceAndValidation) {
  RunConfig base;
  base.hp.T = 7;
  base.hp.gamma = 0.95;
  const auto c = run_config_from_json({{"hp", {{"T", 9}}}, {"seed", 4}}, base);
  EXPECT_EQ(c.hp.T, 9u);
  EXPECT_EQ(c.hp.gamma, 0.95);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4}));
  try {
    run_config_from_json({{"bogus_key", 1}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos);
  }
  EXPECT_THROW(run_config_from_json({{"hp", {{"L_prime", 900}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"benchmark", 7}}), ConfigError);
  EXPECT_NO_THROW(run_config_from_json({{"decisions", {{"anything", true}}}}));
}

TEST(Config, MalformedFileAndOutputRoot) {
  const auto dir = scratch("cfg");
  std::ofstream(dir / "bad.json") << "{\"benchmark\": ";
  EXPECT_THROW(read_json_file(dir / "bad.json"), ConfigError);
  ::setenv(kOutputRootEnv, "/tmp/somewhere", 1);
  EXPECT_EQ(default_output_root(), fs::path("/tmp/somewhere"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(default_output_root(), fs::path("runs"));
}

TEST(Config, TwoSeedsGiveTwoRunDirectoriesAndRoundTrip) {
  const auto dir = scratch("runs");
  const auto cfg = run_config_from_json(tiny_run(dir / "group"));
  for (auto s : cfg.seeds) trainer::train(train_config_for(cfg, s));
  for (auto s : cfg.seeds) {
    const auto t = read_csv(seed_run_dir(cfg, s) / "metrics.csv");
    EXPECT_EQ(t.rows.size(), 100u);
    EXPECT_EQ(t.values("smoothed_return"), trainer::running_mean(t.values("return"), trainer::kSmoothingWindow));
  }
  EXPECT_EQ(seed_dirs(dir / "group").size(), 2u);

  // Re-execute seed 1 from the serialised config into a fresh directory.
  auto j = run_config_to_json(cfg);
  j["output_dir"] = (dir / "replay").string();
  const auto again = run_config_from_json(j);
  trainer::train(train_config_for(again, 1));
  EXPECT_EQ(slurp(seed_run_dir(cfg, 1) / "metrics.csv"), slurp(seed_run_dir(again, 1) / "metrics.csv"));
  EXPECT_EQ(slurp(seed_run_dir(cfg, 1) / "update_metrics.csv"),
            slurp(seed_run_dir(again, 1) / "update_metrics.csv"));
}

TEST(Csv, ErrorsAndColumns) {
  const auto dir = scratch("csv");
  std::ofstream(dir / "ok.csv") << "a,b\n1,2\n3,4.5\n";
  const auto t = read_csv(dir / "ok.csv");
  EXPECT_EQ(t.values("b"), (std::vector<double>{2.0, 4.5}));
  EXPECT_THROW((void)t.column("c"), ConfigError);
  std::ofstream(dir / "ragged.csv") << "a,b\n1\n";
  EXPECT_THROW(read_csv(dir / "ragged.csv"), ConfigError);
  std::ofstream(dir / "text.csv") << "a\nfoo\n";
  EXPECT_THROW(read_csv(dir / "text.csv"), ConfigError);
}

TEST(Modulation, LoggedFactorsRecomputeExactly) {
  const models::Model actor({1, models::Variant::NMN}, 21);
  ModulationSpec spec;
  spec.episodes = 5;
  spec.steps = 20;
  const auto traces = record_modulation(actor, spec);
  ASSERT_EQ(traces.size(), 5u);
  const auto layer = actor.neuromod_layers()[spec.layer];
  for (const auto& tr : traces) {
    ASSERT_EQ(tr.steps(), 20u);
    for (std::size_t t = 0; t < tr.steps(); ++t) {
      const std::span<const double> z(tr.z.data() + t * tr.z_dim, tr.z_dim);
      std::vector<double> s, b;
      actor.modulation_factors(layer, z, s, b);
      for (std::size_t i = 0; i < tr.neurons; ++i) {
        EXPECT_NEAR(s[i], tr.scale[t * tr.neurons + i], 1e-12);
        EXPECT_NEAR(b[i], tr.offset[t * tr.neurons + i], 1e-12);
      }
    }
  }
  std::ostringstream os;
  write_modulation_csv(os, traces);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("episode,t,alpha_0,reward,z_0", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1u + 5u * 20u);
}

TEST(Modulation, ZeroScaleNeuronIgnoresInput) {
  // A neuron whose scale z.ws is zero outputs act(z.wb) whatever its input.
  models::Model actor({1, models::Variant::NMN}, 22);
  const auto idx = actor.neuromod_layers().front();
  const auto& l = std::get<core::NeuromodDenseLayer>(actor.layers()[idx]);
  for (auto& v : actor.params().value(l.scale).row(0)) v = 0.0;
  std::vector<double> z(actor.signal_dim(), 0.3), s, b;
  actor.modulation_factors(idx, z, s, b);
  EXPECT_EQ(s[0], 0.0);
  std::vector<double> out;
  for (double x : {-3.0, 0.0, 2.0}) {
    std::vector<double> y(l.out);
    std::vector<double> saved(core::saved_size(actor.layers()[idx]));
    std::vector<double> xs(l.in, x);
    core::neuromod_forward(actor.params(), l, xs.data(), z.data(), saved.data(), y.data());
    out.push_back(y[0]);
  }
  EXPECT_EQ(out[0], out[1]);
  EXPECT_EQ(out[1], out[2]);
}

TEST(Modulation, RnnAndBadLayerAreRejected) {
  const models::Model rnn({1, models::Variant::RNN}, 1);
  EXPECT_THROW(record_modulation(rnn, {}), VariantError);
  const models::Model nmn({1, models::Variant::NMN}, 1);
  ModulationSpec spec;
  spec.layer = 9;
  EXPECT_THROW(record_modulation(nmn, spec), ContractError);
}

TEST(Freeze, LockedStagesHoldSignalAndOrderIsMonotone) {
  const models::Model actor({3, models::Variant::NMN}, 23);
  FreezeSpec spec;
  spec.plan = parse_stage_plan("a:6,b:5,c:7,d:4,e:5");
  spec.episodes = 3;
  const auto eps = freeze_experiment(actor, spec);
  ASSERT_EQ(eps.size(), 3u);
  for (const auto& ep : eps) {
    ASSERT_EQ(ep.steps.size(), 27u);
    const auto& first = ep.steps.front();
    char last_stage = 'a';
    const FreezeStep* c_first = nullptr;
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
      const auto& s = ep.steps[i];
      EXPECT_EQ(s.t, i);
      EXPECT_GE(s.stage, last_stage);
      last_stage = s.stage;
      if (s.stage == 'a') {
        EXPECT_EQ(s.z, first.z);
        EXPECT_EQ(s.scale, first.scale);
      }
      if (s.stage == 'c' && !c_first) c_first = &s;
      if (s.stage == 'c' || s.stage == 'd') {
        ASSERT_NE(c_first, nullptr);
        EXPECT_EQ(s.z, c_first->z);
        EXPECT_EQ(s.scale, c_first->scale);
      }
      EXPECT_EQ(s.locked, s.stage == 'a' || s.stage == 'c' || s.stage == 'd');
      const double a5 = ep.alpha.at(4);
      EXPECT_EQ(s.alpha5, (s.stage == 'd' || s.stage == 'e') ? -a5 : a5);
    }
  }
  std::ostringstream os;
  write_freeze_jsonl(os, eps);
  const auto dump = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(dump.begin(), dump.end(), '\n')), 81u);
  std::size_t total = 0;
  for (const auto& h : count_hits(eps)) total += h.positive + h.negative;
  EXPECT_LE(total, 81u);
}

TEST(Freeze, PlanValidationAndVariants) {
  EXPECT_THROW(parse_stage_plan("a:10,b:10,c:10,d:10"), ConfigError);
  EXPECT_THROW(parse_stage_plan("b:10,a:10,c:10,d:10,e:10"), ConfigError);
  EXPECT_THROW(parse_stage_plan("a:0,b:10,c:10,d:10,e:10"), ConfigError);
  EXPECT_THROW(parse_stage_plan("a10,b:10,c:10,d:10,e:10"), ConfigError);
  EXPECT_EQ(StagePlan{}.total_steps(), 500u);
  EXPECT_THROW(freeze_experiment(models::Model({3, models::Variant::RNN}, 1), {}), VariantError);
  EXPECT_THROW(freeze_experiment(models::Model({1, models::Variant::NMN}, 1), {}), ConfigError);
}

TEST(Plot, AggregateUsesPopulationStd) {
  const std::vector<std::vector<double>> curves{{1.0, 2.0}, {3.0, 2.0}};
  const auto c = aggregate_curves("x", curves);
  EXPECT_EQ(c.mean, (std::vector<double>{2.0, 2.0}));
  EXPECT_EQ(c.std, (std::vector<double>{1.0, 0.0}));
  const std::vector<std::vector<double>> ragged{{1.0}, {1.0, 2.0}};
  EXPECT_THROW(aggregate_curves("y", ragged), DimensionError);
}

TEST(Plot, CurveFileAndSvg) {
  const auto dir = scratch("plot");
  std::vector<CurveStats> curves;
  for (int k = 0; k < 2; ++k) {
    std::vector<std::vector<double>> seeds;
    for (int s = 0; s < 15; ++s) {
      std::vector<double> v(50);
      for (int i = 0; i < 50; ++i) v[i] = i * (k + 1) + s;
      seeds.push_back(v);
    }
    curves.push_back(aggregate_curves(k ? "rnn" : "nmn", seeds));
  }
  write_curves_csv(dir / "curves.csv", curves);
  const auto t = read_csv(dir / "curves.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"episode", "nmn_mean", "nmn_std", "rnn_mean", "rnn_std"}));
  EXPECT_EQ(t.rows.size(), 50u);
  const auto svg = learning_curves_svg(curves, "a < b");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
  const std::vector<ScatterSeries> pts{{"z0", {1, 2, 3}, {3, 2, 1}}};
  EXPECT_NE(scatter_svg(pts, "t", "alpha", "z").find("<circle"), std::string::npos);
}
