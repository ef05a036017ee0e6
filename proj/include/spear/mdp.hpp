#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "spear/state_set.hpp"

namespace spear {

using ActionId = std::int32_t;
inline constexpr ActionId kNoAction = -1;

struct Outcome {
  StateId next;
  double prob;
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

// Finite MDP dynamics (S, A, T). Immutable once built; rewards live in RewardFunction.
class Mdp {
 public:
  class Builder {
   public:
    Builder(std::size_t n_states, std::size_t n_actions);

    // Sets T(state, action, .). Duplicate successors are merged; zero-mass entries dropped.
    Builder& set(StateId state, ActionId action, std::vector<Outcome> outcomes);

    // Validates and freezes. Throws std::invalid_argument when a distribution does not
    // sum to 1 within 1e-9 or references an out-of-range state.
    Mdp build() &&;

   private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<std::vector<Outcome>> table_;
  };

  std::size_t num_states() const { return n_states_; }
  std::size_t num_actions() const { return n_actions_; }

  bool is_terminal(StateId s) const { return legal_[s].empty(); }
  std::span<const ActionId> actions(StateId s) const { return legal_[s]; }
  bool is_legal(StateId s, ActionId a) const;

  // Successor distribution, sorted by successor index. Empty for illegal actions.
  std::span<const Outcome> outcomes(StateId s, ActionId a) const;

  // Highest-probability successor; ties go to the lowest state index.
  StateId most_likely(StateId s, ActionId a) const;

  bool is_deterministic() const { return deterministic_; }

 private:
  Mdp() = default;

  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<std::uint32_t> offsets_;  // (s * A + a) -> range start in outcomes_, size S*A+1
  std::vector<Outcome> outcomes_;
  std::vector<std::vector<ActionId>> legal_;
  bool deterministic_ = true;
};

// R : S x A x S -> reals. Entries are addressed either by successor (every transition
// entering s') or by the full (s, a, s') triple; triple overrides take precedence.
class RewardFunction {
 public:
  RewardFunction() = default;
  RewardFunction(std::size_t n_states, double default_reward)
      : entry_(n_states, default_reward) {}

  std::size_t num_states() const { return entry_.size(); }

  double operator()(StateId s, ActionId a, StateId next) const {
    if (!overrides_.empty()) {
      if (auto it = overrides_.find(key(s, a, next)); it != overrides_.end()) return it->second;
    }
    return entry_[static_cast<std::size_t>(next)];
  }

  // Reward for entering `next` when no triple override applies.
  double entry(StateId next) const { return entry_[static_cast<std::size_t>(next)]; }

  // Overwrites the reward of every transition entering `next`, clearing triple overrides on it.
  void set_entry(StateId next, double value);

  // Overwrites exactly one (s, a, s') entry.
  void set(StateId s, ActionId a, StateId next, double value);

  bool has_overrides() const { return !overrides_.empty(); }

  friend bool operator==(const RewardFunction&, const RewardFunction&) = default;

 private:
  static std::uint64_t key(StateId s, ActionId a, StateId next) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 34) ^
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 30) ^
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(next));
  }

  std::vector<double> entry_;
  std::unordered_map<std::uint64_t, double> overrides_;
};

struct Policy {
  std::vector<ActionId> action;  // kNoAction on terminal states

  ActionId operator()(StateId s) const { return action[static_cast<std::size_t>(s)]; }
  friend bool operator==(const Policy&, const Policy&) = default;
};

struct PlannerOptions {
  double gamma = 0.99;
  double tol = 1e-6;
  int max_sweeps = 0;  // 0 selects 10 * |S|, plus the contraction bound when gamma < 1
};

struct Plan {
  std::vector<double> values;
  Policy policy;
  int sweeps = 0;
  double residual = 0.0;  // max_s |(T V)(s) - V(s)| at return
};

// Gauss-Seidel value iteration followed by greedy extraction. Terminal values are 0.
// Greedy ties within tol/2 go to the lowest action index. Throws NonConvergence.
Plan value_iteration(const Mdp& mdp, const RewardFunction& reward, const PlannerOptions& options = {});

// One-step lookahead value of `a` in `s` under `values`.
double q_value(const Mdp& mdp, const RewardFunction& reward, std::span<const double> values,
               double gamma, StateId s, ActionId a);

struct Step {
  StateId state;
  ActionId action;
  StateId next;
  double reward;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
  StateId start = 0;
  std::vector<Step> steps;
  double cumulative = 0.0;
  bool reached_terminal = false;  // false means the horizon cap stopped it

  // start followed by every successor, in visit order.
  std::vector<StateId> states() const;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class RolloutMode { deterministic, stochastic };

struct RolloutOptions {
  RolloutMode mode = RolloutMode::stochastic;
  std::uint64_t seed = 0;
  int horizon = 0;  // 0 selects 4 * |S|
};

// Follows `policy` from `start`. Deterministic mode always takes the most likely successor.
// Throws std::logic_error if the policy has no action at a non-terminal state it reaches.
Trajectory rollout(const Mdp& mdp, const Policy& policy, const RewardFunction& reward, StateId start,
                   const RolloutOptions& options = {});

// Mean cumulative reward over n_rollouts stochastic rollouts with seeds derived from rng_seed.
// A deterministic MDP needs a single rollout.
double expected_return(const Mdp& mdp, const Policy& policy, const RewardFunction& reward, StateId start,
                       int n_rollouts, std::uint64_t rng_seed, int horizon = 0);

}  // namespace spear
