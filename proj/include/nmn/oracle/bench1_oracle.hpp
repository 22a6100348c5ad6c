#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "nmn/core/parallel.hpp"

namespace nmn::oracle {

/// Case d plays a_0 + r_0 + 1 - kCaseDMargin so that the lower candidate lands
/// strictly inside the |a - p| < 1 window.
inline constexpr double kCaseDMargin = 1e-9;

/// Largest gap accepted between the two candidate sets when intersecting them.
inline constexpr double kIntersectTolerance = 1e-6;

/// Per-episode memory of the Bayes-optimal policy. The target action is
/// a_t = x_t + offset, where offset = -alpha.
struct OracleState {
  int t = 0;
  double x0 = 0.0, a0 = 0.0, r0 = 0.0;
  double x1 = 0.0, a1 = 0.0, r1 = 0.0;
  char case1 = 0;                 // 'a'..'d' once t = 1 has been played
  char case2 = 0;                 // 'a'..'c' once t = 2 has been played
  std::optional<double> offset;   // replayed offset from t = 2 on
  std::optional<double> alpha;    // set only when inferred by intersection
};

/// a_0 - x_0 played at t = 0.
double first_offset(double gamma, double alpha_max);

/// Action for the current step. Throws DomainError for gamma outside (0, 1)
/// or alpha_max <= 0, StateError if called twice without record_reward, and
/// InvariantError when the candidate intersection is not a singleton.
double oracle_action(OracleState& s, double x, double gamma, double alpha_max);

/// Stores the reward of the action just played and advances t.
void record_reward(OracleState& s, double reward);

enum class ClosedForm {
  ProofSteps,      // E[r0] + gamma E[V1] + tail with the intermediate polynomials
  Exact,           // piecewise integration of the realised r0 and r1
  HeadlineLiteral  // the displayed headline expression
};

/// Expected discounted return of the oracle. Throws DomainError for
/// alpha_max < 1 or gamma outside (0, 1).
double closed_form_return(double gamma, double alpha_max, ClosedForm form = ClosedForm::ProofSteps);

/// True when the proof-step polynomials describe the played policy, which
/// needs a_0 - x_0 <= alpha_max - 1.
bool proof_steps_valid(double gamma, double alpha_max);

enum class Bench1Policy { Oracle, Zero, RepeatObservation };

struct McConfig {
  double gamma = 0.9;
  double alpha_max = 10.0;
  std::size_t episodes = 100000;
  std::size_t horizon = 200;
  std::uint64_t seed = 0;
  double tail_tolerance = 1e-6;
  Bench1Policy policy = Bench1Policy::Oracle;
  core::ExecPolicy exec = core::ExecPolicy::Serial;
};

struct McResult {
  double mean = 0.0;              // discounted
  double se = 0.0;
  double undiscounted_mean = 0.0;
  std::size_t episodes = 0;
  std::size_t horizon = 0;
  std::size_t tail_violations = 0;      // oracle steps t >= 2 with reward != 10
  std::size_t intersections = 0;        // episodes resolved by case 3c
  double truncation_bound = 0.0;        // gamma^L * 10 / (1 - gamma)
  std::optional<std::string> warning;   // truncation bound above tolerance
};

/// Plays the chosen policy on the benchmark-1 environment. Episode e uses
/// envs::episode_rng(seed, 0, e), so the result is independent of `exec`.
McResult mc_return(const McConfig& cfg);

/// Report with keys gamma, alpha_max, closed_form_proof_steps,
/// closed_form_theorem2_literal, mc_mean, mc_se, undiscounted_mean, episodes,
/// horizon, plus the exact form and diagnostics.
nlohmann::ordered_json oracle_report(const McConfig& cfg);

}  // namespace nmn::oracle
