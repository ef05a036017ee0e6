#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spear/evac.hpp"
#include "spear/mdp.hpp"
#include "spear/predicates.hpp"
#include "spear/setcover.hpp"
#include "spear/state_set.hpp"

namespace spear {

struct SpearConfig {
  double reward_floor = -50.0;     // R_L
  int n_rollouts = 10;             // k
  int max_outer_loops = 10;
  double feedback_reward = -100.0;
  double epsilon = 5.0;
  RolloutMode mode = RolloutMode::stochastic;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  double tol = 1e-6;
  int horizon = 0;                 // 0 selects 4 * |S|
  // Retrain pi_h on the corrected reward before every divergence rollout. Off means every
  // rollout follows the policy trained on the uncorrected R_h.
  bool replan_each_rollout = true;
  bool hard_path_constraint = false;
  std::optional<double> penalty;   // L; defaults to 1 + sum of predicate costs

  // Throws std::invalid_argument unless k >= 1 and max_outer_loops >= 1.
  void validate() const;
  PlannerOptions planner() const { return {gamma, tol, 0}; }
};

struct Feedback {
  std::vector<int> predicates;  // selected predicate ids, ascending
  std::vector<std::string> descriptions;
  double reward = -100.0;
  StateSet covered;             // union of the selected extensions
  std::string message;
  int loop = 0;                 // outer loop that produced it; 0 when nothing was needed

  bool empty() const { return predicates.empty(); }
};

// Agent belief: the true reward with exit reward only at observed exits and without any
// fire penalty. Throws NoKnownExit when observed_exits is empty.
RewardFunction estimate_agent_reward(const evac::EvacMap& map, const evac::DomainParams& params,
                                     const RewardFunction& true_reward, std::span<const StateId> observed_exits);

struct Divergence {
  StateSet states;                // S-bar
  std::vector<StateId> order;     // S-bar in discovery order
  RewardFunction corrected;       // R_h*
  std::vector<Trajectory> rollouts;
};

// Rolls pi_h out k times in `world`, scoring steps under the true reward. At the first
// step where the running total drops to the floor, the entered state joins S-bar and its
// entry reward in R_h* is restored from `truth`. pi_h is planned in `agent`, the dynamics
// the agent believes in. `stream` separates rollout seeds across outer loops.
Divergence find_divergent_states(const Mdp& world, const Mdp& agent, const RewardFunction& truth,
                                 const RewardFunction& agent_reward, const SpearConfig& cfg, StateId start,
                                 std::uint64_t stream = 0);
Divergence find_divergent_states(const Mdp& mdp, const RewardFunction& truth, const RewardFunction& agent_reward,
                                 const SpearConfig& cfg, StateId start);

// Most-likely rollout of `policy` from start; states() starts with `start`.
Trajectory desired_trajectory(const Mdp& mdp, const Policy& policy, StateId start, int horizon = 0);

struct LoopRecord {
  int loop = 0;
  std::vector<StateId> divergent;  // ascending
  std::vector<StateId> desired;    // distinct states of O-bar, ascending
  Trajectory desired_path;
  cover::IpInstance instance;
  cover::SetCoverSolution solution;
  double solve_ms = 0.0;
  std::vector<StateId> penalized;  // states set to -L after a case-three solve
};

struct SpearResult {
  Feedback feedback;
  std::vector<LoopRecord> loops;
  RewardFunction working_reward;   // R after every case-three penalty
  std::vector<cover::Case> cases;
  double total_ms = 0.0;

  double solve_ms() const;
};

// Full procedure. Throws NoSolution (some divergent state has no covering predicate) or
// LoopLimitExceeded; `truth` itself is never modified.
SpearResult run_spear(const Mdp& world, const Mdp& agent, const RewardFunction& truth,
                      const RewardFunction& agent_reward, const PredicateSet& predicates, const SpearConfig& cfg,
                      StateId start);
SpearResult run_spear(const Mdp& mdp, const RewardFunction& truth, const RewardFunction& agent_reward,
                      const PredicateSet& predicates, const SpearConfig& cfg, StateId start);

// Builds the feedback for a selection of predicate ids.
Feedback make_feedback(const PredicateSet& predicates, std::span<const int> selected, double reward, int loop);

// Every transition entering a covered state gets fb.reward.
RewardFunction apply_feedback(const RewardFunction& agent_reward, const Feedback& fb);

// "There is a bad reward when <a> OR <b> ..."; empty feedback renders as "".
std::string render_feedback(const Feedback& fb);

struct EpisodeReturns {
  double pre = 0.0;
  double post = 0.0;
  double optimal = 0.0;
};

// One JSON document describing a run: S-bar, per-loop instances, cases and the feedback.
void write_run_record(const SpearResult& result, const evac::EvacMap& map, const std::optional<EpisodeReturns>& returns,
                      std::ostream& out);

}  // namespace spear
