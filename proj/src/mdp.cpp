#include "spear/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

#include "spear/errors.hpp"
#include "spear/rng.hpp"

namespace spear {

Mdp::Builder::Builder(std::size_t n_states, std::size_t n_actions)
    : n_states_(n_states), n_actions_(n_actions), table_(n_states * n_actions) {
  if (n_states == 0) throw std::invalid_argument("MDP needs at least one state");
}

Mdp::Builder& Mdp::Builder::set(StateId state, ActionId action, std::vector<Outcome> outcomes) {
  if (state < 0 || static_cast<std::size_t>(state) >= n_states_ || action < 0 ||
      static_cast<std::size_t>(action) >= n_actions_)
    throw std::invalid_argument("transition (" + std::to_string(state) + ", " + std::to_string(action) +
                                ") is out of range");
  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.next < b.next; });
  std::vector<Outcome> merged;
  for (const Outcome& o : outcomes) {
    if (o.prob < 0.0) throw std::invalid_argument("negative transition probability");
    if (o.prob == 0.0) continue;
    if (!merged.empty() && merged.back().next == o.next)
      merged.back().prob += o.prob;
    else
      merged.push_back(o);
  }
  table_[static_cast<std::size_t>(state) * n_actions_ + static_cast<std::size_t>(action)] = std::move(merged);
  return *this;
}

Mdp Mdp::Builder::build() && {
  Mdp m;
  m.n_states_ = n_states_;
  m.n_actions_ = n_actions_;
  m.offsets_.reserve(table_.size() + 1);
  m.legal_.resize(n_states_);
  for (std::size_t s = 0; s < n_states_; ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const auto& dist = table_[s * n_actions_ + a];
      m.offsets_.push_back(static_cast<std::uint32_t>(m.outcomes_.size()));
      if (dist.empty()) continue;
      double total = 0.0;
      for (const Outcome& o : dist) {
        if (o.next < 0 || static_cast<std::size_t>(o.next) >= n_states_)
          throw std::invalid_argument("successor " + std::to_string(o.next) + " is out of range");
        total += o.prob;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("T(" + std::to_string(s) + ", " + std::to_string(a) + ") sums to " +
                                    std::to_string(total));
      if (dist.size() > 1) m.deterministic_ = false;
      m.outcomes_.insert(m.outcomes_.end(), dist.begin(), dist.end());
      m.legal_[s].push_back(static_cast<ActionId>(a));
    }
  }
  m.offsets_.push_back(static_cast<std::uint32_t>(m.outcomes_.size()));
  return m;
}

bool Mdp::is_legal(StateId s, ActionId a) const { return !outcomes(s, a).empty(); }

std::span<const Outcome> Mdp::outcomes(StateId s, ActionId a) const {
  if (a < 0 || static_cast<std::size_t>(a) >= n_actions_) return {};
  const std::size_t idx = static_cast<std::size_t>(s) * n_actions_ + static_cast<std::size_t>(a);
  return std::span<const Outcome>(outcomes_).subspan(offsets_[idx], offsets_[idx + 1] - offsets_[idx]);
}

StateId Mdp::most_likely(StateId s, ActionId a) const {
  const auto dist = outcomes(s, a);
  if (dist.empty()) throw std::logic_error("most_likely on an illegal action");
  // Sorted by successor, so strict '>' keeps the lowest index among ties.
  const Outcome* best = &dist[0];
  for (const Outcome& o : dist)
    if (o.prob > best->prob) best = &o;
  return best->next;
}

void RewardFunction::set_entry(StateId next, double value) {
  entry_.at(static_cast<std::size_t>(next)) = value;
  if (!overrides_.empty()) {
    std::erase_if(overrides_, [next](const auto& kv) {
      return static_cast<StateId>(kv.first & ((std::uint64_t{1} << 30) - 1)) == next;
    });
  }
}

void RewardFunction::set(StateId s, ActionId a, StateId next, double value) { overrides_[key(s, a, next)] = value; }

double q_value(const Mdp& mdp, const RewardFunction& reward, std::span<const double> values, double gamma, StateId s,
               ActionId a) {
  double q = 0.0;
  for (const Outcome& o : mdp.outcomes(s, a)) q += o.prob * (reward(s, a, o.next) + gamma * values[o.next]);
  return q;
}

namespace {

double bellman_backup(const Mdp& mdp, const RewardFunction& reward, std::span<const double> values, double gamma,
                      StateId s) {
  double best = -std::numeric_limits<double>::infinity();
  for (ActionId a : mdp.actions(s)) best = std::max(best, q_value(mdp, reward, values, gamma, s, a));
  return best;
}

double bellman_residual(const Mdp& mdp, const RewardFunction& reward, std::span<const double> values, double gamma) {
  double res = 0.0;
  for (StateId s = 0; s < static_cast<StateId>(mdp.num_states()); ++s) {
    if (mdp.is_terminal(s)) continue;
    res = std::max(res, std::abs(bellman_backup(mdp, reward, values, gamma, s) - values[s]));
  }
  return res;
}

// Without discounting, sweeps starting from zero walk values down one step cost at a
// time wherever the only ways out are heavily penalized. Starting from the value of a
// policy that always makes progress toward some terminal state avoids that: the
// iteration then climbs monotonically to the optimum.
std::vector<double> proper_policy_values(const Mdp& mdp, const RewardFunction& reward, double tol, int cap) {
  const auto n = static_cast<StateId>(mdp.num_states());
  std::vector<std::vector<StateId>> preds(mdp.num_states());
  for (StateId s = 0; s < n; ++s)
    for (ActionId a : mdp.actions(s))
      for (const Outcome& o : mdp.outcomes(s, a)) preds[o.next].push_back(s);

  std::vector<int> hops(mdp.num_states(), -1);
  std::deque<StateId> queue;
  for (StateId s = 0; s < n; ++s)
    if (mdp.is_terminal(s)) {
      hops[s] = 0;
      queue.push_back(s);
    }
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (StateId p : preds[s])
      if (hops[p] < 0) {
        hops[p] = hops[s] + 1;
        queue.push_back(p);
      }
  }

  // Per state, the action with the most mass on states one hop closer.
  std::vector<ActionId> act(mdp.num_states(), kNoAction);
  for (StateId s = 0; s < n; ++s) {
    if (mdp.is_terminal(s) || hops[s] < 0) continue;
    double best = 0.0;
    for (ActionId a : mdp.actions(s)) {
      double mass = 0.0;
      for (const Outcome& o : mdp.outcomes(s, a))
        if (hops[o.next] >= 0 && hops[o.next] < hops[s]) mass += o.prob;
      if (mass > best) {
        best = mass;
        act[s] = a;
      }
    }
  }

  std::vector<double> v(mdp.num_states(), 0.0);
  for (int sweep = 0; sweep < cap; ++sweep) {
    double delta = 0.0;
    for (StateId s = 0; s < n; ++s) {
      if (act[s] == kNoAction) continue;
      double q = 0.0;
      for (const Outcome& o : mdp.outcomes(s, act[s])) q += o.prob * (reward(s, act[s], o.next) + v[o.next]);
      delta = std::max(delta, std::abs(q - v[s]));
      v[s] = q;
    }
    if (delta < tol) break;
  }
  return v;
}

}  // namespace

Plan value_iteration(const Mdp& mdp, const RewardFunction& reward, const PlannerOptions& options) {
  if (!(options.gamma > 0.0 && options.gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (reward.num_states() != mdp.num_states()) throw std::invalid_argument("reward/MDP state count mismatch");

  const auto n = static_cast<StateId>(mdp.num_states());
  const double target = options.tol / 2.0;
  int cap = options.max_sweeps > 0 ? options.max_sweeps : 10 * n;
  if (options.max_sweeps <= 0 && options.gamma < 1.0) {
    // states that can never leave converge no faster than gamma^k; add enough sweeps
    // for the contraction bound to get under the target
    double rmax = 0.0;
    for (StateId s = 0; s < n; ++s)
      for (ActionId a : mdp.actions(s))
        for (const Outcome& o : mdp.outcomes(s, a)) rmax = std::max(rmax, std::abs(reward(s, a, o.next)));
    if (rmax > 0.0) {
      const double k = std::log(target * (1.0 - options.gamma) / (2.0 * rmax)) / std::log(options.gamma);
      cap += static_cast<int>(std::min(std::ceil(std::max(k, 0.0)), 1e8));
    }
  }

  Plan plan;
  if (options.gamma == 1.0)
    plan.values = proper_policy_values(mdp, reward, target, cap);
  else
    plan.values.assign(mdp.num_states(), 0.0);
  double residual = std::numeric_limits<double>::infinity();
  int sweep = 0;
  while (sweep < cap) {
    ++sweep;
    double delta = 0.0;
    for (StateId s = 0; s < n; ++s) {
      if (mdp.is_terminal(s)) continue;
      const double v = bellman_backup(mdp, reward, plan.values, options.gamma, s);
      delta = std::max(delta, std::abs(v - plan.values[s]));
      plan.values[s] = v;
    }
    if (delta < target) {
      residual = bellman_residual(mdp, reward, plan.values, options.gamma);
      if (residual < target) break;
    }
  }
  if (!(residual < target)) {
    residual = bellman_residual(mdp, reward, plan.values, options.gamma);
    throw NonConvergence(sweep, residual);
  }
  plan.sweeps = sweep;
  plan.residual = residual;

  plan.policy.action.assign(mdp.num_states(), kNoAction);
  for (StateId s = 0; s < n; ++s) {
    const auto acts = mdp.actions(s);
    if (acts.empty()) continue;
    std::vector<double> q(acts.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < acts.size(); ++i) {
      q[i] = q_value(mdp, reward, plan.values, options.gamma, s, acts[i]);
      best = std::max(best, q[i]);
    }
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (q[i] >= best - target) {
        plan.policy.action[s] = acts[i];
        break;
      }
    }
  }
  return plan;
}

std::vector<StateId> Trajectory::states() const {
  std::vector<StateId> out;
  out.reserve(steps.size() + 1);
  out.push_back(start);
  for (const Step& st : steps) out.push_back(st.next);
  return out;
}

Trajectory rollout(const Mdp& mdp, const Policy& policy, const RewardFunction& reward, StateId start,
                   const RolloutOptions& options) {
  if (start < 0 || static_cast<std::size_t>(start) >= mdp.num_states())
    throw std::invalid_argument("rollout start state out of range");
  const int horizon = options.horizon > 0 ? options.horizon : static_cast<int>(4 * mdp.num_states());
  Rng rng(options.seed);

  Trajectory traj;
  traj.start = start;
  StateId s = start;
  while (!mdp.is_terminal(s) && static_cast<int>(traj.steps.size()) < horizon) {
    const ActionId a = policy(s);
    if (!mdp.is_legal(s, a))
      throw std::logic_error("policy has no legal action at state " + std::to_string(s));
    StateId next;
    if (options.mode == RolloutMode::deterministic) {
      next = mdp.most_likely(s, a);
    } else {
      const auto dist = mdp.outcomes(s, a);
      const double u = rng.unit();
      double acc = 0.0;
      next = dist.back().next;
      for (const Outcome& o : dist) {
        acc += o.prob;
        if (u < acc) {
          next = o.next;
          break;
        }
      }
    }
    const double r = reward(s, a, next);
    traj.steps.push_back({s, a, next, r});
    traj.cumulative += r;
    s = next;
  }
  traj.reached_terminal = mdp.is_terminal(s);
  return traj;
}

double expected_return(const Mdp& mdp, const Policy& policy, const RewardFunction& reward, StateId start,
                       int n_rollouts, std::uint64_t rng_seed, int horizon) {
  if (n_rollouts < 1) throw std::invalid_argument("n_rollouts must be >= 1");
  if (mdp.is_deterministic()) {
    return rollout(mdp, policy, reward, start, {RolloutMode::deterministic, rng_seed, horizon}).cumulative;
  }
  double total = 0.0;
  for (int i = 0; i < n_rollouts; ++i) {
    const auto seed = n_rollouts == 1 ? rng_seed : mix_seed(rng_seed, static_cast<std::uint64_t>(i));
    total += rollout(mdp, policy, reward, start, {RolloutMode::stochastic, seed, horizon}).cumulative;
  }
  return total / n_rollouts;
}

}  // namespace spear
