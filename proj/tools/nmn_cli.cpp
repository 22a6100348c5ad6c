#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nmn/core/errors.hpp"
#include "nmn/harness/config.hpp"
#include "nmn/harness/csv.hpp"
#include "nmn/harness/freeze.hpp"
#include "nmn/harness/modulation.hpp"
#include "nmn/harness/plot.hpp"
#include "nmn/models/checkpoint.hpp"
#include "nmn/oracle/bench1_oracle.hpp"
#include "nmn/trainer/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nmn;

namespace {

// "key=value" pairs; the value is parsed as JSON and falls back to a string.
json parse_assignments(const std::vector<std::string>& items, const std::string& flag) {
  json out = json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(fmt::format("{} expects key=value, got '{}'", flag, item));
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    out[key] = v.is_discarded() ? json(value) : v;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream os(path);
  if (!os) {
    throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  }
  os << text;
}

envs::EnvOptions env_from_checkpoint(const models::Checkpoint& ck) {
  if (ck.metadata.contains("env")) {
    return trainer::env_options_from_json(ck.metadata.at("env"));
  }
  return {};
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> hp, env;
  std::map<std::string, std::string> strings;
  int benchmark = 0;
  int depth = -2;
  std::vector<std::uint64_t> seeds;
  std::size_t episodes = 0;
  std::size_t checkpoint_every = 0;
  std::size_t trajectory_every = 0;
  bool verbose = false;
};

int run_train(const TrainArgs& a, const CLI::App& cmd) {
  harness::RunConfig cfg;
  if (!a.config.empty()) {
    cfg = harness::run_config_from_json(harness::read_json_file(a.config), cfg);
  }
  json overlay = json::object();
  if (cmd.count("--benchmark") > 0) overlay["benchmark"] = a.benchmark;
  if (cmd.count("--variant") > 0) overlay["variant"] = a.strings.at("variant");
  if (cmd.count("--family") > 0) overlay["activation_family"] = a.strings.at("family");
  if (cmd.count("--depth") > 0) overlay["depth_override"] = a.depth;
  if (cmd.count("--seeds") > 0) overlay["seeds"] = a.seeds;
  if (cmd.count("--out") > 0) overlay["output_dir"] = a.strings.at("out");
  if (cmd.count("--exec") > 0) overlay["exec"] = a.strings.at("exec");
  if (cmd.count("--checkpoint-every") > 0) overlay["checkpoint_every"] = a.checkpoint_every;
  if (cmd.count("--trajectory-every") > 0) overlay["trajectory_every"] = a.trajectory_every;
  json hp = parse_assignments(a.hp, "--hp");
  if (cmd.count("--episodes") > 0) hp["E"] = a.episodes;
  if (!hp.empty()) overlay["hp"] = hp;
  if (!a.env.empty()) overlay["env"] = parse_assignments(a.env, "--env");
  cfg = harness::run_config_from_json(overlay, cfg);
  if (cfg.output_dir.empty()) {
    cfg.output_dir = harness::default_output_root() /
                     fmt::format("bench{}_{}", cfg.model.benchmark, models::variant_name(cfg.model.variant));
  }
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "run_config.json", harness::run_config_to_json(cfg).dump(2) + "\n");
  for (const auto seed : cfg.seeds) {
    trainer::TrainConfig tc = harness::train_config_for(cfg, seed);
    tc.verbose = a.verbose;
    const auto res = trainer::train(tc);
    fmt::print("seed {}: {} episodes, final smoothed return {:.3f} -> {}\n", seed,
               res.returns.size(), res.smoothed.empty() ? 0.0 : res.smoothed.back(),
               tc.run_dir.string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neuromodulated-network meta-RL workbench"};
  app.require_subcommand(1);

  // train
  TrainArgs ta;
  ta.strings = {{"variant", ""}, {"family", ""}, {"out", ""}, {"exec", ""}};
  auto* train = app.add_subcommand("train", "Train one run per seed");
  train->add_option("-c,--config", ta.config, "JSON run config (CLI flags take precedence)");
  train->add_option("--benchmark", ta.benchmark, "1, 2 or 3");
  train->add_option("--variant", ta.strings["variant"], "nmn or rnn");
  train->add_option("--family", ta.strings["family"], "default, srelu or sigmoid");
  train->add_option("--depth", ta.depth, "Main-network depth override: -1, 0, 1 or 4");
  train->add_option("--seeds", ta.seeds, "Seed list");
  train->add_option("--episodes", ta.episodes, "Episode budget E");
  train->add_option("--out", ta.strings["out"], "Output directory (default $NMN_OUTPUT_ROOT or runs)");
  train->add_option("--exec", ta.strings["exec"], "serial or openmp");
  train->add_option("--hp", ta.hp, "Hyper-parameter override key=value (repeatable)");
  train->add_option("--env", ta.env, "Environment option key=value (repeatable)");
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Iterations between checkpoints");
  train->add_option("--trajectory-every", ta.trajectory_every, "Dump every n-th batch to trajectories.jsonl");
  train->add_flag("-v,--verbose", ta.verbose, "Print one line per update");

  // eval-oracle
  oracle::McConfig oc;
  oc.gamma = 0.998;
  oc.episodes = 10000;
  oc.horizon = 0;
  std::string oracle_out;
  std::string oracle_exec = "serial";
  auto* eval = app.add_subcommand("eval-oracle", "Closed forms and Monte-Carlo return of the benchmark-1 oracle");
  eval->add_option("--gamma", oc.gamma, "Discount factor")->capture_default_str();
  eval->add_option("--alpha-max", oc.alpha_max, "Task range")->capture_default_str();
  eval->add_option("--episodes", oc.episodes, "Monte-Carlo episodes")->capture_default_str();
  eval->add_option("--horizon", oc.horizon, "Steps per episode; 0 picks the smallest horizon meeting --tolerance");
  eval->add_option("--tolerance", oc.tail_tolerance, "Truncation tolerance")->capture_default_str();
  eval->add_option("--seed", oc.seed, "Seed")->capture_default_str();
  eval->add_option("--exec", oracle_exec, "serial or openmp")->capture_default_str();
  eval->add_option("--out", oracle_out, "Write the JSON report here instead of stdout");

  // analyze-modulation
  harness::ModulationSpec ms;
  std::string mod_ckpt, mod_out, mod_exec = "serial";
  auto* mod = app.add_subcommand("analyze-modulation", "Record z and per-neuron scale factors");
  mod->add_option("--checkpoint", mod_ckpt, "NMN checkpoint")->required();
  mod->add_option("--episodes", ms.episodes, "Evaluation episodes")->capture_default_str();
  mod->add_option("--steps", ms.steps, "Steps per episode")->capture_default_str();
  mod->add_option("--layer", ms.layer, "Modulated layer index")->capture_default_str();
  mod->add_option("--seed", ms.seed, "Seed")->capture_default_str();
  mod->add_option("--exec", mod_exec, "serial or openmp")->capture_default_str();
  mod->add_option("--out", mod_out, "CSV path (default: modulation.csv next to the checkpoint)");

  // freeze-experiment
  harness::FreezeSpec fs_spec;
  std::string fr_ckpt, fr_out, fr_plan, fr_exec = "serial";
  auto* freeze = app.add_subcommand("freeze-experiment", "Lock and unlock z on benchmark 3");
  freeze->add_option("--checkpoint", fr_ckpt, "Benchmark-3 NMN checkpoint")->required();
  freeze->add_option("--episodes", fs_spec.episodes, "Staged episodes")->capture_default_str();
  freeze->add_option("--plan", fr_plan, "Stages, e.g. a:100,b:100,c:100,d:100,e:100");
  freeze->add_option("--layer", fs_spec.layer, "Modulated layer index")->capture_default_str();
  freeze->add_option("--seed", fs_spec.seed, "Seed")->capture_default_str();
  freeze->add_option("--exec", fr_exec, "serial or openmp")->capture_default_str();
  freeze->add_option("--out", fr_out, "JSONL path (default: freeze.jsonl next to the checkpoint)");

  // plot
  std::vector<std::string> groups;
  std::string plot_out = "plots", plot_mod, plot_title = "Learning curves";
  auto* plot = app.add_subcommand("plot", "SVG learning curves and z-vs-alpha scatter data");
  plot->add_option("--group", groups, "LABEL=DIR holding seed_* run directories (repeatable)");
  plot->add_option("--modulation", plot_mod, "modulation.csv from analyze-modulation");
  plot->add_option("--title", plot_title, "Learning-curve title")->capture_default_str();
  plot->add_option("--out", plot_out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      return run_train(ta, *train);
    }
    if (*eval) {
      oc.exec = core::parse_exec_policy(oracle_exec);
      if (oc.horizon == 0) {
        // Smallest L with gamma^L * 10 / (1 - gamma) <= tolerance.
        const double l = std::log(oc.tail_tolerance * (1.0 - oc.gamma) / 10.0) / std::log(oc.gamma);
        oc.horizon = static_cast<std::size_t>(std::max(1.0, std::ceil(l)));
      }
      const auto report = oracle::oracle_report(oc);
      if (oracle_out.empty()) {
        fmt::print("{}\n", report.dump(2));
      } else {
        write_text(oracle_out, report.dump(2) + "\n");
      }
      return 0;
    }
    if (*mod) {
      ms.exec = core::parse_exec_policy(mod_exec);
      const auto ck = models::load_checkpoint(mod_ckpt);
      ms.env = env_from_checkpoint(ck);
      const auto actor = models::actor_from_checkpoint(ck);
      const auto traces = harness::record_modulation(actor, ms);
      const fs::path out = mod_out.empty() ? fs::path(mod_ckpt).parent_path() / "modulation.csv" : fs::path(mod_out);
      std::ofstream os(out);
      if (!os) {
        throw ConfigError(fmt::format("cannot write '{}'", out.string()));
      }
      harness::write_modulation_csv(os, traces);
      fmt::print("{} episodes x {} steps -> {}\n", traces.size(), ms.steps, out.string());
      return 0;
    }
    if (*freeze) {
      fs_spec.exec = core::parse_exec_policy(fr_exec);
      if (!fr_plan.empty()) {
        fs_spec.plan = harness::parse_stage_plan(fr_plan);
      }
      const auto ck = models::load_checkpoint(fr_ckpt);
      fs_spec.env = env_from_checkpoint(ck);
      const auto actor = models::actor_from_checkpoint(ck);
      const auto episodes = harness::freeze_experiment(actor, fs_spec);
      const fs::path out = fr_out.empty() ? fs::path(fr_ckpt).parent_path() / "freeze.jsonl" : fs::path(fr_out);
      std::ofstream os(out);
      if (!os) {
        throw ConfigError(fmt::format("cannot write '{}'", out.string()));
      }
      harness::write_freeze_jsonl(os, episodes);
      const auto hits = harness::count_hits(episodes);
      for (std::size_t s = 0; s < hits.size(); ++s) {
        fmt::print("stage {}: {} positive hits, {} negative hits\n", static_cast<char>('a' + s),
                   hits[s].positive, hits[s].negative);
      }
      fmt::print("-> {}\n", out.string());
      return 0;
    }
    if (*plot) {
      if (groups.empty() && plot_mod.empty()) {
        throw ConfigError("plot needs at least one --group or a --modulation file");
      }
      fs::create_directories(plot_out);
      if (!groups.empty()) {
        std::vector<harness::CurveStats> curves;
        for (const auto& g : groups) {
          const auto eq = g.find('=');
          if (eq == std::string::npos) {
            throw ConfigError(fmt::format("--group expects LABEL=DIR, got '{}'", g));
          }
          std::vector<std::vector<double>> seeds;
          for (const auto& dir : harness::seed_dirs(g.substr(eq + 1))) {
            seeds.push_back(harness::smoothed_returns(dir / "metrics.csv"));
          }
          if (seeds.empty()) {
            throw ConfigError(fmt::format("group '{}' has no seed_* run directories", g));
          }
          curves.push_back(harness::aggregate_curves(g.substr(0, eq), seeds));
        }
        harness::write_curves_csv(fs::path(plot_out) / "learning_curves.csv", curves);
        write_text(fs::path(plot_out) / "learning_curves.svg", harness::learning_curves_svg(curves, plot_title));
      }
      if (!plot_mod.empty()) {
        const auto table = harness::read_csv(plot_mod);
        const std::size_t ep_col = table.column("episode");
        const std::size_t a_col = table.column("alpha_0");
        // Last row of each episode.
        std::vector<std::size_t> last;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
          if (i + 1 == table.rows.size() || table.rows[i + 1][ep_col] != table.rows[i][ep_col]) {
            last.push_back(i);
          }
        }
        std::ofstream os(fs::path(plot_out) / "z_vs_alpha.csv");
        os << "episode";
        for (std::size_t c = 0; c < table.header.size(); ++c) {
          if (table.header[c] != "episode" && table.header[c] != "t") os << ',' << table.header[c];
        }
        os << '\n';
        for (const auto i : last) {
          os << table.rows[i][ep_col];
          for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (table.header[c] != "episode" && table.header[c] != "t") os << fmt::format(",{}", table.rows[i][c]);
          }
          os << '\n';
        }
        for (const char* prefix : {"z_", "s_"}) {
          std::vector<harness::ScatterSeries> series;
          for (std::size_t j = 0; j < 4; ++j) {
            const std::string name = fmt::format("{}{}", prefix, j);
            bool found = false;
            for (const auto& h : table.header) found = found || h == name;
            if (!found) break;
            harness::ScatterSeries s{name, {}, {}};
            const std::size_t col = table.column(name);
            for (const auto i : last) {
              s.x.push_back(table.rows[i][a_col]);
              s.y.push_back(table.rows[i][col]);
            }
            series.push_back(std::move(s));
          }
          const std::string what = prefix[0] == 'z' ? "z" : "scale factor";
          write_text(fs::path(plot_out) / fmt::format("{}_vs_alpha.svg", prefix[0] == 'z' ? "z" : "scale"),
                     harness::scatter_svg(series, what + " at the last step vs alpha", "alpha_0", what));
        }
      }
      fmt::print("plots -> {}\n", plot_out);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const VariantError& e) {
    std::cerr << "variant error: " << e.what() << '\n';
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
