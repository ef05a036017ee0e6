#include "spear/spear.hpp"

#include <algorithm>
#include <chrono>
#include <json.hpp>
#include <ostream>
#include <stdexcept>

#include "spear/errors.hpp"
#include "spear/rng.hpp"

namespace spear {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

RolloutOptions rollout_options(const SpearConfig& cfg, std::uint64_t seed) { return {cfg.mode, seed, cfg.horizon}; }

}  // namespace

void SpearConfig::validate() const {
  if (n_rollouts < 1) throw std::invalid_argument("n_rollouts must be >= 1");
  if (max_outer_loops < 1) throw std::invalid_argument("max_outer_loops must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
}

double SpearResult::solve_ms() const {
  double t = 0.0;
  for (const auto& l : loops) t += l.solve_ms;
  return t;
}

RewardFunction estimate_agent_reward(const evac::EvacMap& map, const evac::DomainParams& params,
                                     const RewardFunction& true_reward, std::span<const StateId> observed_exits) {
  if (observed_exits.empty()) throw NoKnownExit();
  StateSet known(map.num_states());
  for (StateId s : observed_exits) {
    if (s < 0 || static_cast<std::size_t>(s) >= map.num_states() || map.at(map.cell_of(s)) != evac::CellType::exit)
      throw std::invalid_argument("observed exit " + std::to_string(s) + " is not an exit state");
    known.insert(s);
  }
  RewardFunction belief = true_reward;
  for (evac::Coord c : map.exits()) {
    const StateId s = map.state_of(c);
    if (!known.contains(s)) belief.set_entry(s, params.rewards.step);
  }
  for (evac::Coord c : map.fires()) belief.set_entry(map.state_of(c), params.rewards.step);
  return belief;
}

Divergence find_divergent_states(const Mdp& world, const Mdp& agent, const RewardFunction& truth,
                                 const RewardFunction& agent_reward, const SpearConfig& cfg, StateId start,
                                 std::uint64_t stream) {
  cfg.validate();
  if (world.num_states() != agent.num_states())
    throw std::invalid_argument("world and agent models must share a state space");
  if (start < 0 || static_cast<std::size_t>(start) >= world.num_states())
    throw std::invalid_argument("start state out of range");

  Divergence out{StateSet(world.num_states()), {}, agent_reward, {}};
  Policy pi_h = value_iteration(agent, agent_reward, cfg.planner()).policy;
  bool stale = false;
  for (int k = 0; k < cfg.n_rollouts; ++k) {
    if (cfg.replan_each_rollout && stale) {
      pi_h = value_iteration(agent, out.corrected, cfg.planner()).policy;
      stale = false;
    }
    Trajectory t = rollout(world, pi_h, truth, start,
                           rollout_options(cfg, mix_seed(cfg.seed, stream, static_cast<std::uint64_t>(k))));
    double total = 0.0;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const Step& st = t.steps[i];
      total += st.reward;
      if (total <= cfg.reward_floor) {
        if (!out.states.contains(st.next)) {
          out.states.insert(st.next);
          out.order.push_back(st.next);
        }
        if (out.corrected.entry(st.next) != truth.entry(st.next)) {
          out.corrected.set_entry(st.next, truth.entry(st.next));
          stale = true;
        }
        break;
      }
    }
    out.rollouts.push_back(std::move(t));
  }
  return out;
}

Divergence find_divergent_states(const Mdp& mdp, const RewardFunction& truth, const RewardFunction& agent_reward,
                                 const SpearConfig& cfg, StateId start) {
  return find_divergent_states(mdp, mdp, truth, agent_reward, cfg, start);
}

Trajectory desired_trajectory(const Mdp& mdp, const Policy& policy, StateId start, int horizon) {
  // Rewards are irrelevant here; only the visited states matter.
  const RewardFunction zero(mdp.num_states(), 0.0);
  return rollout(mdp, policy, zero, start, {RolloutMode::deterministic, 0, horizon});
}

Feedback make_feedback(const PredicateSet& predicates, std::span<const int> selected, double reward, int loop) {
  Feedback fb;
  fb.reward = reward;
  fb.loop = loop;
  fb.covered = StateSet(predicates.num_states());
  fb.predicates.assign(selected.begin(), selected.end());
  std::sort(fb.predicates.begin(), fb.predicates.end());
  for (int id : fb.predicates) {
    const Predicate& p = predicates.at(static_cast<std::size_t>(id));
    fb.descriptions.push_back(p.description);
    fb.covered |= p.extension;
  }
  fb.message = render_feedback(fb);
  return fb;
}

SpearResult run_spear(const Mdp& world, const Mdp& agent, const RewardFunction& truth,
                      const RewardFunction& agent_reward, const PredicateSet& predicates, const SpearConfig& cfg,
                      StateId start) {
  cfg.validate();
  if (predicates.num_states() != world.num_states())
    throw std::invalid_argument("predicates were computed over a different state space");
  const auto t0 = Clock::now();

  SpearResult result;
  result.working_reward = truth;
  result.feedback.covered = StateSet(world.num_states());
  result.feedback.reward = cfg.feedback_reward;

  for (int loop = 1; loop <= cfg.max_outer_loops; ++loop) {
    LoopRecord rec;
    rec.loop = loop;
    Divergence div = find_divergent_states(world, agent, result.working_reward, agent_reward, cfg, start,
                                           static_cast<std::uint64_t>(loop));
    rec.divergent = div.states.members();
    if (div.states.empty()) {
      result.loops.push_back(std::move(rec));
      result.total_ms = ms_since(t0);
      return result;
    }

    const Policy pi_h_star = value_iteration(agent, div.corrected, cfg.planner()).policy;
    rec.desired_path = desired_trajectory(world, pi_h_star, start, cfg.horizon);
    const auto path_states = rec.desired_path.states();

    const CoverageMatrices m = build_coverage_matrices(rec.divergent, path_states, predicates);
    rec.desired = m.state_of_v_row;
    rec.instance = cover::IpInstance::from(m, predicates, cfg.penalty);
    const auto ts = Clock::now();
    rec.solution = cover::solve_spear_ip(rec.instance, {cfg.hard_path_constraint});
    rec.solve_ms = ms_since(ts);
    result.cases.push_back(rec.solution.kind);

    std::vector<int> ids;
    for (int j : rec.solution.selected) ids.push_back(m.predicate_of_column[static_cast<std::size_t>(j)]);

    if (rec.solution.kind == cover::Case::two) {
      result.loops.push_back(std::move(rec));
      throw NoSolution(loop);
    }
    if (rec.solution.kind == cover::Case::one) {
      result.feedback = make_feedback(predicates, ids, cfg.feedback_reward, loop);
      result.loops.push_back(std::move(rec));
      result.total_ms = ms_since(t0);
      return result;
    }

    // Case three: push the optimal policy off the covered states it would visit.
    StateSet cover(world.num_states());
    for (int id : ids) cover |= predicates.at(static_cast<std::size_t>(id)).extension;
    const Policy pi_star = value_iteration(world, result.working_reward, cfg.planner()).policy;
    const double minus_l = -rec.instance.penalty;
    StateSet penalized(world.num_states());
    for (int k = 0; k < cfg.n_rollouts; ++k) {
      const Trajectory t =
          rollout(world, pi_star, result.working_reward, start,
                  rollout_options(cfg, mix_seed(cfg.seed, 0x5eedULL + static_cast<std::uint64_t>(loop),
                                                static_cast<std::uint64_t>(k))));
      for (const Step& st : t.steps)
        if (cover.contains(st.next) && result.working_reward.entry(st.next) != minus_l) penalized.insert(st.next);
    }
    // pi* may already route around the cover; charge the overlap with O-bar instead so the
    // next loop sees a different problem.
    if (penalized.empty())
      for (StateId s : rec.desired)
        if (cover.contains(s) && result.working_reward.entry(s) != minus_l) penalized.insert(s);
    penalized.for_each([&](StateId s) { result.working_reward.set_entry(s, minus_l); });
    rec.penalized = penalized.members();
    result.loops.push_back(std::move(rec));
  }
  throw LoopLimitExceeded(cfg.max_outer_loops);
}

SpearResult run_spear(const Mdp& mdp, const RewardFunction& truth, const RewardFunction& agent_reward,
                      const PredicateSet& predicates, const SpearConfig& cfg, StateId start) {
  return run_spear(mdp, mdp, truth, agent_reward, predicates, cfg, start);
}

RewardFunction apply_feedback(const RewardFunction& agent_reward, const Feedback& fb) {
  RewardFunction out = agent_reward;
  if (fb.empty()) return out;
  fb.covered.for_each([&](StateId s) { out.set_entry(s, fb.reward); });
  return out;
}

std::string render_feedback(const Feedback& fb) {
  if (fb.descriptions.empty()) return {};
  std::string msg = "There is a bad reward when ";
  for (std::size_t i = 0; i < fb.descriptions.size(); ++i) {
    if (i) msg += " OR ";
    msg += fb.descriptions[i];
  }
  return msg;
}

void write_run_record(const SpearResult& result, const evac::EvacMap& map, const std::optional<EpisodeReturns>& returns,
                      std::ostream& out) {
  using nlohmann::json;
  auto cells = [&](const std::vector<StateId>& states) {
    json a = json::array();
    for (StateId s : states) {
      const auto c = map.cell_of(s);
      a.push_back({c.x, c.y});
    }
    return a;
  };
  json doc;
  doc["format"] = "spear-run 1";
  doc["map_seed"] = map.seed();
  json cases = json::array();
  for (auto c : result.cases) cases.push_back(static_cast<int>(c));
  doc["cases"] = cases;
  json loops = json::array();
  for (const LoopRecord& l : result.loops) {
    json rec;
    rec["loop"] = l.loop;
    rec["divergent"] = cells(l.divergent);
    rec["desired"] = cells(l.desired_path.states());
    rec["penalized"] = cells(l.penalized);
    if (l.instance.num_predicates() > 0) {
      rec["penalty"] = l.instance.penalty;
      rec["u_rows"] = l.instance.u.rows();
      rec["v_rows"] = l.instance.v.rows();
      rec["predicates"] = l.instance.num_predicates();
      rec["selected_columns"] = l.solution.selected;
      rec["objective"] = l.solution.feasible() ? json(l.solution.objective) : json(nullptr);
      rec["case"] = static_cast<int>(l.solution.kind);
      rec["nodes"] = l.solution.nodes;
    }
    loops.push_back(std::move(rec));
  }
  doc["loops"] = loops;
  const Feedback& fb = result.feedback;
  doc["feedback"] = {{"predicates", fb.predicates},
                     {"descriptions", fb.descriptions},
                     {"reward", fb.reward},
                     {"covered", cells(fb.covered.members())},
                     {"message", fb.message},
                     {"loop", fb.loop}};
  if (returns) doc["returns"] = {{"pre", returns->pre}, {"post", returns->post}, {"optimal", returns->optimal}};
  out << doc.dump(1) << '\n';
}

}  // namespace spear
