#include "nmn/oracle/bench1_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"
#include "nmn/envs/benchmarks.hpp"

namespace nmn::oracle {

namespace {

constexpr double kRmax = 10.0;

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError(fmt::format("gamma must lie in (0, 1), got {}", gamma));
  }
}

double intersect(const OracleState& s) {
  const double o0 = s.a0 - s.x0;
  const double o1 = s.a1 - s.x1;
  const std::array<double, 2> c0{o0 + s.r0, o0 - s.r0};
  const std::array<double, 2> c1{o1 + s.r1, o1 - s.r1};
  int matches = 0;
  double found = 0.0;
  for (double u : c0) {
    for (double v : c1) {
      if (std::abs(u - v) <= kIntersectTolerance) {
        ++matches;
        found = u;
      }
    }
  }
  if (matches != 1) {
    throw InvariantError(fmt::format(
        "candidate sets {{{}, {}}} and {{{}, {}}} share {} elements, expected exactly one", c0[0],
        c0[1], c1[0], c1[1], matches));
  }
  return found;
}

// r0 and r1 of the oracle as functions of the target offset i.
struct Realised {
  double o;
  double alpha_max;
  double r0(double i) const {
    const double d = std::abs(o - i);
    return d < 1.0 ? kRmax : -d;
  }
  double r1(double i) const {
    if (std::abs(o - i) < 1.0 || i <= o + 1.0 || i < 2.0 * o - alpha_max) {
      return kRmax;
    }
    return -(2.0 * (i - o) - 1.0);
  }
};

// Both integrands are linear between the breakpoints, so the trapezoid rule
// with one-sided limits is exact.
double integrate_exact(double gamma, double alpha_max) {
  const Realised f{first_offset(gamma, alpha_max), alpha_max};
  std::vector<double> pts{-alpha_max, alpha_max, f.o - 1.0, f.o, f.o + 1.0, 2.0 * f.o - alpha_max};
  for (double& p : pts) {
    p = std::clamp(p, -alpha_max, alpha_max);
  }
  std::sort(pts.begin(), pts.end());
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double lo = pts[k];
    const double hi = pts[k + 1];
    if (hi - lo <= 0.0) {
      continue;
    }
    const double mid = 0.5 * (lo + hi);
    // Evaluate the branch active at the midpoint at both ends.
    const double r0m = f.r0(mid);
    const double r1m = f.r1(mid);
    const auto r0_at = [&](double i) { return r0m == kRmax ? kRmax : -std::abs(f.o - i); };
    const auto r1_at = [&](double i) { return r1m == kRmax ? kRmax : -(2.0 * (i - f.o) - 1.0); };
    const double g_lo = r0_at(lo) + gamma * r1_at(lo);
    const double g_hi = r0_at(hi) + gamma * r1_at(hi);
    sum += 0.5 * (g_lo + g_hi) * (hi - lo);
  }
  return sum / (2.0 * alpha_max);
}

}  // namespace

double first_offset(double gamma, double alpha_max) {
  return gamma * (alpha_max + 4.5) / (1.0 + gamma);
}

double oracle_action(OracleState& s, double x, double gamma, double alpha_max) {
  check_gamma(gamma);
  if (!(alpha_max > 0.0)) {
    throw DomainError(fmt::format("alpha_max must be positive, got {}", alpha_max));
  }
  if (s.t == 0) {
    if (s.case1 != 0) {
      throw StateError("oracle_action called twice at t = 0");
    }
    s.x0 = x;
    s.a0 = x + first_offset(gamma, alpha_max);
    s.case1 = '-';
    return s.a0;
  }
  if (s.t == 1) {
    if (s.case1 != '-') {
      throw StateError("oracle_action called twice at t = 1");
    }
    const double o = s.a0 - s.x0;
    const double m = std::abs(s.r0);
    s.x1 = x;
    if (s.r0 == kRmax) {
      s.case1 = 'a';
      s.a1 = x + o;
    } else if (m > alpha_max - o && o > 0.0) {
      s.case1 = 'b';
      s.a1 = s.a0 + s.r0;
    } else if (m > alpha_max + o && o < 0.0) {
      s.case1 = 'c';
      s.a1 = s.a0 - s.r0;
    } else {
      s.case1 = 'd';
      s.a1 = s.a0 + s.r0 + 1.0 - kCaseDMargin;
    }
    return s.a1;
  }
  if (!s.offset) {
    if (s.r0 == kRmax) {
      s.case2 = 'a';
      s.offset = s.a0 - s.x0;
    } else if (s.r1 == kRmax) {
      s.case2 = 'b';
      s.offset = s.a1 - s.x1;
    } else {
      s.case2 = 'c';
      const double i = intersect(s);
      const double alpha = -i;
      if (std::abs(alpha) > alpha_max + kIntersectTolerance) {
        throw InvariantError(
            fmt::format("inferred alpha {} lies outside [-{}, {}]", alpha, alpha_max, alpha_max));
      }
      s.offset = i;
      s.alpha = alpha;
    }
  }
  return x + *s.offset;
}

void record_reward(OracleState& s, double reward) {
  if (s.t == 0) {
    s.r0 = reward;
  } else if (s.t == 1) {
    s.r1 = reward;
  }
  ++s.t;
}

bool proof_steps_valid(double gamma, double alpha_max) {
  return first_offset(gamma, alpha_max) <= alpha_max - 1.0;
}

double closed_form_return(double gamma, double alpha_max, ClosedForm form) {
  check_gamma(gamma);
  if (!(alpha_max >= 1.0)) {
    throw DomainError(fmt::format("alpha_max must be at least 1, got {}", alpha_max));
  }
  const double tail = gamma * gamma * kRmax / (1.0 - gamma);
  const double am = alpha_max;
  switch (form) {
    case ClosedForm::ProofSteps: {
      const double a = first_offset(gamma, am);
      const double er0 = (-a * a + 21.0 - am * am) / (2.0 * am);
      const double ev1 =
          -a * a / (2.0 * am) + (am + 4.5) * a / am + (5.0 + 5.5 * am - am * am / 2.0) / am;
      return er0 + gamma * ev1 + tail;
    }
    case ClosedForm::Exact:
      return integrate_exact(gamma, am) + tail;
    case ClosedForm::HeadlineLiteral:
      return 3.0 * gamma * gamma * (am + 4.5) * (am + 4.5) / (2.0 * am * (1.0 + gamma)) +
             (21.0 + am * am + gamma * (10.0 + 11.0 * am - am * am)) / (2.0 * am) + tail;
  }
  throw ContractError("unknown closed form");
}

McResult mc_return(const McConfig& cfg) {
  check_gamma(cfg.gamma);
  if (cfg.episodes < 1) {
    throw ContractError("mc_return needs at least one episode");
  }
  if (cfg.horizon < 1) {
    throw ContractError("mc_return needs a horizon of at least one step");
  }
  envs::EnvOptions opts;
  opts.alpha_max = cfg.alpha_max;

  struct Episode {
    double discounted = 0.0;
    double undiscounted = 0.0;
    std::size_t violations = 0;
    bool intersected = false;
  };
  std::vector<Episode> out(cfg.episodes);

  core::parallel_for(cfg.episodes, cfg.exec, [&](std::size_t e) {
    envs::Rng rng = envs::episode_rng(cfg.seed, 0, e);
    const envs::TaskSample task = envs::sample_task(1, rng, opts);
    envs::EnvState env = envs::reset(task, rng, opts);
    OracleState st;
    Episode& ep = out[e];
    double disc = 1.0;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
      const double x = env.obs[0];
      double a = 0.0;
      switch (cfg.policy) {
        case Bench1Policy::Oracle:
          a = oracle_action(st, x, cfg.gamma, cfg.alpha_max);
          break;
        case Bench1Policy::Zero:
          a = 0.0;
          break;
        case Bench1Policy::RepeatObservation:
          a = x;
          break;
      }
      const double r = envs::bench1_step(env, a, task, rng);
      if (cfg.policy == Bench1Policy::Oracle) {
        record_reward(st, r);
        if (t >= 2 && r != kRmax) {
          ++ep.violations;
        }
      }
      ep.discounted += disc * r;
      ep.undiscounted += r;
      disc *= cfg.gamma;
    }
    ep.intersected = st.alpha.has_value();
  });

  McResult res;
  res.episodes = cfg.episodes;
  res.horizon = cfg.horizon;
  double sum = 0.0;
  double sum_u = 0.0;
  for (const Episode& ep : out) {
    sum += ep.discounted;
    sum_u += ep.undiscounted;
    res.tail_violations += ep.violations;
    res.intersections += ep.intersected ? 1 : 0;
  }
  const double n = static_cast<double>(cfg.episodes);
  res.mean = sum / n;
  res.undiscounted_mean = sum_u / n;
  if (cfg.episodes > 1) {
    double ss = 0.0;
    for (const Episode& ep : out) {
      const double d = ep.discounted - res.mean;
      ss += d * d;
    }
    res.se = std::sqrt(ss / (n - 1.0) / n);
  }
  res.truncation_bound =
      std::pow(cfg.gamma, static_cast<double>(cfg.horizon)) * kRmax / (1.0 - cfg.gamma);
  if (res.truncation_bound > cfg.tail_tolerance) {
    res.warning = fmt::format("truncation bound {:.3g} exceeds tolerance {:.3g}; raise the horizon",
                              res.truncation_bound, cfg.tail_tolerance);
  }
  return res;
}

nlohmann::ordered_json oracle_report(const McConfig& cfg) {
  const McResult mc = mc_return(cfg);
  nlohmann::ordered_json j;
  j["gamma"] = cfg.gamma;
  j["alpha_max"] = cfg.alpha_max;
  j["closed_form_proof_steps"] = closed_form_return(cfg.gamma, cfg.alpha_max, ClosedForm::ProofSteps);
  j["closed_form_theorem2_literal"] =
      closed_form_return(cfg.gamma, cfg.alpha_max, ClosedForm::HeadlineLiteral);
  j["mc_mean"] = mc.mean;
  j["mc_se"] = mc.se;
  j["undiscounted_mean"] = mc.undiscounted_mean;
  j["episodes"] = mc.episodes;
  j["horizon"] = mc.horizon;
  j["closed_form_exact"] = closed_form_return(cfg.gamma, cfg.alpha_max, ClosedForm::Exact);
  j["proof_steps_valid"] = proof_steps_valid(cfg.gamma, cfg.alpha_max);
  j["tail_violations"] = mc.tail_violations;
  j["intersections"] = mc.intersections;
  j["truncation_bound"] = mc.truncation_bound;
  j["seed"] = cfg.seed;
  if (mc.warning) {
    j["warning"] = *mc.warning;
  }
  return j;
}

}  // namespace nmn::oracle
