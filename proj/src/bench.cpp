#include "spear/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "spear/errors.hpp"
#include "spear/rng.hpp"

namespace spear::bench {

namespace {

using evac::CellType;

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (int t = 0; t < std::min(threads, n); ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

PredicateSet make_predicates(const evac::EvacMap& map, PredicateSource source, int n_ball, int r_min, int r_max,
                             int max_order, std::uint64_t seed) {
  PredicateSet base(map.num_states());
  switch (source) {
    case PredicateSource::layout:
      base = layout_predicates(map);
      break;
    case PredicateSource::ball:
      base = ball_predicates(map, n_ball, r_min, r_max, seed);
      break;
    case PredicateSource::both:
      base = layout_predicates(map).merged(ball_predicates(map, n_ball, r_min, r_max, seed));
      break;
  }
  return max_order > 1 ? compose(base, max_order) : base;
}

int final_case(const SpearResult& r) { return r.cases.empty() ? 0 : static_cast<int>(r.cases.back()); }

// Keeps layout density and predicate reach comparable across sizes, with
// the configured domain taken as the 25x25 reference.
constexpr int kReferenceSize = 25;

evac::DomainParams params_for_size(const evac::DomainParams& base, int size) {
  evac::DomainParams p = base;
  const double area = static_cast<double>(size * size) / (kReferenceSize * kReferenceSize);
  p.width = size;
  p.height = size;
  p.n_rooms = std::max(2, static_cast<int>(std::lround(base.n_rooms * area)));
  p.n_hallways = std::max(p.n_rooms, static_cast<int>(std::lround(base.n_hallways * area)));
  return p;
}

int radius_for_size(int r, int size) {
  return std::max(r, static_cast<int>(std::lround(static_cast<double>(r) * size / kReferenceSize)));
}

}  // namespace

void BenchConfig::validate() const {
  domain.validate();
  spear.validate();
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  if (n_maps < 1) throw std::invalid_argument("n_maps must be >= 1");
  if (n_repeats < 1) throw std::invalid_argument("n_repeats must be >= 1");
  if (n_ball < 1 && source != PredicateSource::layout) throw std::invalid_argument("n_ball must be >= 1");
  if (max_order < 1) throw std::invalid_argument("max_order must be >= 1");
  if (modes.empty()) throw std::invalid_argument("at least one mode is required");
}

std::uint64_t map_seed(const BenchConfig& cfg, int index) {
  return mix_seed(cfg.seed, static_cast<std::uint64_t>(index)) % 1'000'000'007ULL;
}

const char* mode_name(RolloutMode m) { return m == RolloutMode::deterministic ? "det" : "stoch"; }

Scenario build_scenario(const evac::EvacMap& map, const evac::DomainParams& params, PredicateSource source,
                        int n_ball, int r_min, int r_max, int max_order, std::uint64_t predicate_seed) {
  Scenario sc{map, params, evac::to_mdp(map, params), evac::to_mdp(map.without_fires(), params).mdp, {}, {}, {}};
  std::vector<StateId> exits;
  for (evac::Coord c : map.exits()) exits.push_back(map.state_of(c));
  sc.agent_reward = estimate_agent_reward(map, params, sc.world.reward, exits);
  sc.predicates = make_predicates(map, source, n_ball, r_min, r_max, max_order, predicate_seed);
  // Start only where some exit is reachable without crossing fire; nobody can be talked
  // out of a room the fire has sealed. Sealed-only maps fall back to every floor cell.
  const auto dist = evac::distance_to(map, map.exits(), [](CellType t) { return t == CellType::floor; });
  for (evac::Coord c : map.cells_of(CellType::floor))
    if (dist[static_cast<std::size_t>(c.y) * static_cast<std::size_t>(map.width()) + static_cast<std::size_t>(c.x)] > 0)
      sc.starts.push_back(map.state_of(c));
  if (sc.starts.empty())
    for (evac::Coord c : map.cells_of(CellType::floor)) sc.starts.push_back(map.state_of(c));
  if (sc.starts.empty()) throw std::invalid_argument("map has no floor cell to start from");
  return sc;
}

Scenario build_scenario(const evac::DomainParams& params, std::uint64_t seed, PredicateSource source, int n_ball,
                        int r_min, int r_max, int max_order) {
  const evac::EvacMap layout = evac::generate_map(params, seed);
  const evac::EvacMap burning =
      evac::place_fires(layout, params.fire_seeds, params.fire_expansion_steps, mix_seed(seed, 0xf17eULL));
  return build_scenario(burning, params, source, n_ball, r_min, r_max, max_order, mix_seed(seed, 0xba11ULL));
}

StateId episode_start(const Scenario& sc, std::uint64_t seed, int episode) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(episode), 0x57a7ULL));
  return sc.starts[static_cast<std::size_t>(rng.index(sc.starts.size()))];
}

StateId divergent_start(const Scenario& sc, std::uint64_t seed, const SpearConfig& cfg, int tries) {
  const Policy pi_h = value_iteration(sc.agent, sc.agent_reward, cfg.planner()).policy;
  for (int e = 0; e < tries; ++e) {
    const StateId s = episode_start(sc, seed, e);
    const Trajectory t = rollout(sc.world.mdp, pi_h, sc.world.reward, s, {RolloutMode::deterministic, 0, cfg.horizon});
    double total = 0.0;
    for (const Step& st : t.steps)
      if ((total += st.reward) <= cfg.reward_floor) return s;
  }
  return episode_start(sc, seed, 0);
}

EpisodeRow run_episode(const Scenario& sc, const Policy& pre, const Policy& opt, const SpearConfig& cfg,
                       std::uint64_t seed, int episode, StateId start) {
  EpisodeRow row;
  row.map_seed = seed;
  row.episode = episode;
  row.mode = cfg.mode;
  row.start = start;

  SpearConfig run_cfg = cfg;
  run_cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(episode));
  Policy post = pre;
  std::optional<Policy> opt_final;
  try {
    const SpearResult res =
        run_spear(sc.world.mdp, sc.agent, sc.world.reward, sc.agent_reward, sc.predicates, run_cfg, start);
    row.case_id = final_case(res);
    row.loops = static_cast<int>(res.loops.size());
    for (auto c : res.cases) row.cases.push_back(static_cast<int>(c));
    if (row.loops > 1) opt_final = value_iteration(sc.world.mdp, res.working_reward, cfg.planner()).policy;
    if (!res.feedback.empty()) {
      post = value_iteration(sc.agent, apply_feedback(sc.agent_reward, res.feedback), cfg.planner()).policy;
      for (StateId s : res.loops.back().desired)
        if (res.feedback.covered.contains(s)) ++row.path_overlap;
    }
  } catch (const NoSolution& e) {
    row.case_id = 2;
    row.loops = e.loop();
  } catch (const LoopLimitExceeded& e) {
    row.case_id = 3;
    row.loops = e.loops();
  }

  // Common random numbers: the three policies face the same draws.
  const RolloutOptions ro{cfg.mode, mix_seed(seed, static_cast<std::uint64_t>(episode), 0xe915ULL), cfg.horizon};
  row.reward_pre = rollout(sc.world.mdp, pre, sc.world.reward, start, ro).cumulative;
  row.reward_post = rollout(sc.world.mdp, post, sc.world.reward, start, ro).cumulative;
  row.reward_opt = rollout(sc.world.mdp, opt, sc.world.reward, start, ro).cumulative;
  row.reward_opt_final =
      opt_final ? rollout(sc.world.mdp, *opt_final, sc.world.reward, start, ro).cumulative : row.reward_opt;
  return row;
}

std::vector<EpisodeRow> bench_episode_reward(const BenchConfig& cfg) {
  cfg.validate();
  const int n_tasks = cfg.n_maps * static_cast<int>(cfg.modes.size());
  std::vector<std::vector<EpisodeRow>> per_task(static_cast<std::size_t>(n_tasks));
  parallel_for(n_tasks, cfg.threads, [&](int task) {
    const int map_index = task / static_cast<int>(cfg.modes.size());
    const RolloutMode mode = cfg.modes[static_cast<std::size_t>(task) % cfg.modes.size()];
    evac::DomainParams params = cfg.domain;
    if (mode == RolloutMode::deterministic) params.move_success_prob = 1.0;
    const std::uint64_t seed = map_seed(cfg, map_index);
    const Scenario sc =
        build_scenario(params, seed, cfg.source, cfg.n_ball, cfg.ball_r_min, cfg.ball_r_max, cfg.max_order);
    SpearConfig scfg = cfg.spear;
    scfg.mode = mode;
    const Policy pre = value_iteration(sc.agent, sc.agent_reward, scfg.planner()).policy;
    const Policy opt = value_iteration(sc.world.mdp, sc.world.reward, scfg.planner()).policy;
    auto& rows = per_task[static_cast<std::size_t>(task)];
    for (int e = 0; e < cfg.n_episodes; ++e)
      rows.push_back(run_episode(sc, pre, opt, scfg, seed, e, episode_start(sc, seed, e)));
  });
  std::vector<EpisodeRow> out;
  for (auto& rows : per_task) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

void write_episode_csv(const std::vector<EpisodeRow>& rows, std::ostream& out) {
  out << "map_seed,episode,mode,reward_pre,reward_post,case,loops,reward_opt,start,path_overlap,reward_opt_final\n";
  for (const EpisodeRow& r : rows)
    out << r.map_seed << ',' << r.episode << ',' << mode_name(r.mode) << ',' << r.reward_pre << ',' << r.reward_post
        << ',' << r.case_id << ',' << r.loops << ',' << r.reward_opt << ',' << r.start << ',' << r.path_overlap
        << ',' << r.reward_opt_final << '\n';
}

namespace {

ScalingRow time_run(const Scenario& sc, const SpearConfig& cfg, StateId start, int repeats) {
  ScalingRow row;
  row.n_predicates = static_cast<int>(sc.predicates.size());
  row.n_states = static_cast<int>(sc.map.num_states());
  row.size = sc.map.width();
  std::vector<double> solve, total;
  for (int r = 0; r < repeats; ++r) {
    // Timed from outside so runs that end in an exception still count.
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const SpearResult res =
          run_spear(sc.world.mdp, sc.agent, sc.world.reward, sc.agent_reward, sc.predicates, cfg, start);
      solve.push_back(res.solve_ms());
      row.case_id = final_case(res);
      row.loops = static_cast<int>(res.loops.size());
    } catch (const NoSolution& e) {
      row.case_id = 2;
      row.loops = e.loop();
    } catch (const LoopLimitExceeded& e) {
      row.case_id = 3;
      row.loops = e.loops();
    }
    total.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  row.time_ms = solve.empty() ? 0.0 : median(solve);
  row.total_ms = median(total);
  return row;
}

}  // namespace

std::vector<ScalingRow> bench_predicate_scaling(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<int> counts = cfg.predicate_counts;
  std::sort(counts.begin(), counts.end());
  const int n_tasks = cfg.n_maps * static_cast<int>(counts.size());
  std::vector<ScalingRow> rows(static_cast<std::size_t>(n_tasks));
  parallel_for(n_tasks, cfg.threads, [&](int task) {
    const int map_index = task / static_cast<int>(counts.size());
    const int count = counts[static_cast<std::size_t>(task) % counts.size()];
    const std::uint64_t seed = map_seed(cfg, map_index);
    evac::DomainParams params = cfg.domain;
    if (cfg.spear.mode == RolloutMode::deterministic) params.move_success_prob = 1.0;
    const Scenario sc = build_scenario(params, seed, cfg.source, count, cfg.ball_r_min, cfg.ball_r_max, cfg.max_order);
    ScalingRow row = time_run(sc, cfg.spear, divergent_start(sc, seed, cfg.spear), cfg.n_repeats);
    row.map_seed = seed;
    row.n_base = count;
    row.parallel = cfg.threads > 1;
    rows[static_cast<std::size_t>(task)] = row;
  });
  return rows;
}

std::vector<ScalingRow> bench_state_scaling(const BenchConfig& cfg) {
  cfg.validate();
  const int n_tasks = static_cast<int>(cfg.sizes.size()) * cfg.n_repeats;
  std::vector<ScalingRow> rows(static_cast<std::size_t>(n_tasks));
  parallel_for(n_tasks, cfg.threads, [&](int task) {
    const int size = cfg.sizes[static_cast<std::size_t>(task / cfg.n_repeats)];
    const int rep = task % cfg.n_repeats;
    evac::DomainParams params = params_for_size(cfg.domain, size);
    if (cfg.spear.mode == RolloutMode::deterministic) params.move_success_prob = 1.0;
    const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(rep)) %
                               1'000'000'007ULL;
    const Scenario sc =
        build_scenario(params, seed, PredicateSource::ball, cfg.n_ball, cfg.ball_r_min,
                       radius_for_size(cfg.ball_r_max, size), 1);
    ScalingRow row = time_run(sc, cfg.spear, divergent_start(sc, seed, cfg.spear), 3);
    row.map_seed = seed;
    row.n_base = cfg.n_ball;
    row.parallel = cfg.threads > 1;
    rows[static_cast<std::size_t>(task)] = row;
  });
  return rows;
}

void write_scaling_csv(const std::vector<ScalingRow>& rows, std::ostream& out) {
  out << "map_seed,n_predicates,case,time_ms,loops,total_ms,parallel,n_base,n_states,size\n";
  for (const ScalingRow& r : rows)
    out << r.map_seed << ',' << r.n_predicates << ',' << r.case_id << ',' << r.time_ms << ',' << r.loops << ','
        << r.total_ms << ',' << (r.parallel ? 1 : 0) << ',' << r.n_base << ',' << r.n_states << ',' << r.size << '\n';
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs >= 2 paired points");
  double mx = 0, my = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace spear::bench
