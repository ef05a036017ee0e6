#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "spear/errors.hpp"
#include "spear/mdp.hpp"

using namespace spear;
using testing_support::corridor;
using testing_support::corridor_reward;
using testing_support::episodic;

TEST_CASE("builder rejects a distribution that does not sum to one") {
  Mdp::Builder b(2, 1);
  b.set(0, 0, {{0, 0.5}, {1, 0.4}});
  CHECK_THROWS_AS(std::move(b).build(), std::invalid_argument);
}

TEST_CASE("builder rejects an out-of-range successor") {
  Mdp::Builder b(2, 1);
  b.set(0, 0, {{5, 1.0}});
  CHECK_THROWS_AS(std::move(b).build(), std::invalid_argument);
}

TEST_CASE("builder merges duplicate successors") {
  Mdp::Builder b(2, 1);
  b.set(0, 0, {{1, 0.25}, {1, 0.75}});
  const Mdp m = std::move(b).build();
  REQUIRE(m.outcomes(0, 0).size() == 1);
  CHECK(m.outcomes(0, 0)[0].prob == doctest::Approx(1.0));
  CHECK(m.is_terminal(1));
  CHECK_FALSE(m.is_legal(1, 0));
}

TEST_CASE("single terminal state plans to zero with an empty policy") {
  const Mdp m = std::move(Mdp::Builder(1, 1)).build();
  const Plan p = value_iteration(m, RewardFunction(1, -1.0), episodic());
  CHECK(p.values == std::vector<double>{0.0});
  CHECK(p.policy.action == std::vector<ActionId>{kNoAction});
}

TEST_CASE("four-state corridor values are 100 minus distance") {
  const Mdp m = corridor(4);
  const Plan p = value_iteration(m, corridor_reward(4), episodic());
  for (int s = 0; s < 3; ++s) {
    CHECK(p.values[s] == doctest::Approx(100.0 - (3 - s)));
    CHECK(p.policy(s) == 1);
  }
  // enumerate both actions by hand at state 2: right gives 99, left gives -1 + V(1)
  CHECK(q_value(m, corridor_reward(4), p.values, 1.0, 2, 1) == doctest::Approx(99.0));
  CHECK(q_value(m, corridor_reward(4), p.values, 1.0, 2, 0) == doctest::Approx(-1.0 + 98.0));
}

TEST_CASE("greedy ties go to the lowest action index") {
  Mdp::Builder b(2, 3);
  b.set(0, 0, {{1, 1.0}});
  b.set(0, 1, {{1, 1.0}});
  b.set(0, 2, {{1, 1.0}});
  const Mdp m = std::move(b).build();
  CHECK(value_iteration(m, RewardFunction(2, 1.0), episodic()).policy(0) == 0);
}

TEST_CASE("a policy that cannot terminate reports non-convergence") {
  Mdp::Builder b(1, 1);
  b.set(0, 0, {{0, 1.0}});
  const Mdp m = std::move(b).build();
  CHECK_THROWS_AS(value_iteration(m, RewardFunction(1, -1.0), {1.0, 1e-6, 50}), NonConvergence);
}

TEST_CASE("rollout from a terminal state is empty") {
  const Mdp m = corridor(4);
  const Policy pi = value_iteration(m, corridor_reward(4), episodic()).policy;
  const Trajectory t = rollout(m, pi, corridor_reward(4), 3);
  CHECK(t.steps.empty());
  CHECK(t.cumulative == 0.0);
  CHECK(t.reached_terminal);
  CHECK(t.states() == std::vector<StateId>{3});
}

TEST_CASE("deterministic corridor of length 3 returns 97") {
  const Mdp m = corridor(4);
  const Policy pi = value_iteration(m, corridor_reward(4), episodic()).policy;
  const Trajectory t = rollout(m, pi, corridor_reward(4), 0, {RolloutMode::deterministic, 0, 0});
  CHECK(t.steps.size() == 3);
  CHECK(t.cumulative == doctest::Approx(97.0));
  CHECK(expected_return(m, pi, corridor_reward(4), 0, 17, 5) == doctest::Approx(97.0));
  CHECK(t.states() == std::vector<StateId>{0, 1, 2, 3});
}

TEST_CASE("horizon cap stops a rollout and clears the terminal flag") {
  const Mdp m = corridor(6);
  const Policy pi = value_iteration(m, corridor_reward(6), episodic()).policy;
  const Trajectory t = rollout(m, pi, corridor_reward(6), 0, {RolloutMode::deterministic, 0, 2});
  CHECK(t.steps.size() == 2);
  CHECK_FALSE(t.reached_terminal);
}

TEST_CASE("stochastic rollouts repeat under a fixed seed") {
  const Mdp m = corridor(8, 0.6);
  const Policy pi = value_iteration(m, corridor_reward(8), episodic()).policy;
  const Trajectory a = rollout(m, pi, corridor_reward(8), 0, {RolloutMode::stochastic, 99, 0});
  const Trajectory b = rollout(m, pi, corridor_reward(8), 0, {RolloutMode::stochastic, 99, 0});
  CHECK(a == b);
}

TEST_CASE("most likely successor breaks ties toward the lower index") {
  Mdp::Builder b(3, 1);
  b.set(0, 0, {{2, 0.5}, {1, 0.5}});
  const Mdp m = std::move(b).build();
  CHECK(m.most_likely(0, 0) == 1);
}

TEST_CASE("expected_return with n = 1 is the rollout on that seed") {
  const Mdp m = corridor(6, 0.7);
  const RewardFunction r = corridor_reward(6);
  const Policy pi = value_iteration(m, r, episodic()).policy;
  for (std::uint64_t seed : {3u, 4u, 5u})
    CHECK(expected_return(m, pi, r, 0, 1, seed) ==
          rollout(m, pi, r, 0, {RolloutMode::stochastic, seed, 0}).cumulative);
}

TEST_CASE("stochastic corridor mean return matches the Markov chain solution") {
  const Mdp m = corridor(6, 0.85);
  const RewardFunction r = corridor_reward(6);
  const Policy pi = value_iteration(m, r, episodic()).policy;
  const double exact = oracle::chain_values(m, pi, r)[0];
  const int n = 10000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rollout(m, pi, r, 0, {RolloutMode::stochastic, static_cast<std::uint64_t>(i), 0}).cumulative;
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) <= 3 * se);
  const double er = expected_return(m, pi, r, 0, n, 11);
  CHECK(std::abs(er - exact) <= 3 * se);
}

TEST_CASE("reward overwrites only touch the addressed entries") {
  RewardFunction r(4, -1.0);
  r.set(0, 1, 2, 7.0);
  CHECK(r(0, 1, 2) == 7.0);
  CHECK(r(1, 1, 2) == -1.0);
  CHECK(r.entry(2) == -1.0);
  r.set_entry(3, 5.0);
  CHECK(r(0, 0, 3) == 5.0);
  CHECK(r(0, 1, 2) == 7.0);
  r.set_entry(2, 4.0);
  CHECK(r(0, 1, 2) == 4.0);
  CHECK_FALSE(r.has_overrides());
}
