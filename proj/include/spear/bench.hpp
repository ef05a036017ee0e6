#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spear/evac.hpp"
#include "spear/predicates.hpp"
#include "spear/spear.hpp"

namespace spear::bench {

enum class PredicateSource { layout, ball, both };

struct BenchConfig {
  evac::DomainParams domain;
  PredicateSource source = PredicateSource::layout;
  int n_ball = 100;
  int ball_r_min = 1;
  int ball_r_max = 3;
  int max_order = 2;
  int n_maps = 20;
  int n_episodes = 100;
  int n_repeats = 10;
  std::uint64_t seed = 1;
  std::vector<RolloutMode> modes{RolloutMode::deterministic, RolloutMode::stochastic};
  SpearConfig spear;
  int threads = 1;
  std::vector<int> predicate_counts{100, 200, 500, 1000, 2000};
  std::vector<int> sizes{15, 25, 40, 60};

  // Throws std::invalid_argument when a count is out of range.
  void validate() const;
};

// Seeds are explicit: map i of a run uses map_seed(cfg, i).
std::uint64_t map_seed(const BenchConfig& cfg, int index);

// A burning map with both the world model and the agent's fire-blind belief.
struct Scenario {
  evac::EvacMap map;
  evac::DomainParams params;
  evac::EvacModel world;
  Mdp agent;
  RewardFunction agent_reward;
  PredicateSet predicates;
  std::vector<StateId> starts;  // floor cells an episode may start from
};

Scenario build_scenario(const evac::DomainParams& params, std::uint64_t map_seed, PredicateSource source, int n_ball,
                        int r_min, int r_max, int max_order);
// Same, for a fixed map (fires already placed).
Scenario build_scenario(const evac::EvacMap& map, const evac::DomainParams& params, PredicateSource source,
                        int n_ball, int r_min, int r_max, int max_order, std::uint64_t predicate_seed);

StateId episode_start(const Scenario& sc, std::uint64_t map_seed, int episode);

// First episode start (of `tries`) whose most-likely agent rollout drops to the reward
// floor, so timing runs have something to repair. Falls back to episode 0.
StateId divergent_start(const Scenario& sc, std::uint64_t map_seed, const SpearConfig& cfg, int tries = 100);

// Result of one SPEAR run and the three policies it is judged against.
struct EpisodeRow {
  std::uint64_t map_seed = 0;
  int episode = 0;
  RolloutMode mode = RolloutMode::deterministic;
  double reward_pre = 0.0;
  double reward_post = 0.0;
  double reward_opt = 0.0;
  // Optimal policy of the reward left after case-three penalties, scored under the true
  // reward; equals reward_opt when no penalty was applied.
  double reward_opt_final = 0.0;
  int case_id = 0;  // 0 nothing to repair, 1, 2 (no cover), 3 (loop cap hit)
  int loops = 0;
  StateId start = 0;
  int path_overlap = 0;  // covered states on the final desired trajectory
  std::vector<int> cases;
};

EpisodeRow run_episode(const Scenario& sc, const Policy& pre, const Policy& opt, const SpearConfig& cfg,
                       std::uint64_t map_seed, int episode, StateId start);

std::vector<EpisodeRow> bench_episode_reward(const BenchConfig& cfg);
void write_episode_csv(const std::vector<EpisodeRow>& rows, std::ostream& out);

struct ScalingRow {
  std::uint64_t map_seed = 0;
  int n_predicates = 0;
  int n_base = 0;
  int n_states = 0;
  int size = 0;
  int case_id = 0;
  double time_ms = 0.0;   // median solver time over repeats
  int loops = 0;
  double total_ms = 0.0;  // median end-to-end time over repeats
  bool parallel = false;
};

// Solver time vs predicate count on 25x25-style maps; each row is one (map, count).
std::vector<ScalingRow> bench_predicate_scaling(const BenchConfig& cfg);
// End-to-end time vs map size at a fixed ball-predicate count; n_repeats maps per size.
std::vector<ScalingRow> bench_state_scaling(const BenchConfig& cfg);
void write_scaling_csv(const std::vector<ScalingRow>& rows, std::ostream& out);

// Least-squares slope of log(y) on log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

const char* mode_name(RolloutMode m);

}  // namespace spear::bench
