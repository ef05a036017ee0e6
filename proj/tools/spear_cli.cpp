#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "spear/bench.hpp"
#include "spear/errors.hpp"
#include "spear/evac.hpp"
#include "spear/predicates.hpp"
#include "spear/rng.hpp"
#include "spear/spear.hpp"

using namespace spear;

namespace {

struct Options {
  std::uint64_t seed = 1;
  std::string size = "25x25";
  int rooms = 5;
  int hallways = 10;
  int exits = 3;
  int fire_seeds = 3;
  int fire_steps = 2;
  double success = 0.85;
  std::string predicates = "layout";
  int n_ball = 100;
  int r_min = 1;
  int r_max = 3;
  int max_order = 2;
  std::string mode = "stoch";
  int k = 10;
  double rl = -50.0;
  double epsilon = 5.0;
  int max_loops = 10;
  bool hard = false;
  std::string out;
  std::string format = "csv";
  int threads = 1;
};

void domain_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--size", o.size, "grid size WxH")->check([](const std::string& s) {
    int w, h;
    char x;
    std::istringstream in(s);
    if (!(in >> w >> x >> h) || x != 'x' || w < 1 || h < 1 || !in.eof()) return std::string("expected WxH");
    return std::string();
  });
  cmd->add_option("--rooms", o.rooms)->check(CLI::NonNegativeNumber);
  cmd->add_option("--hallways", o.hallways)->check(CLI::NonNegativeNumber);
  cmd->add_option("--exits", o.exits)->check(CLI::PositiveNumber);
  cmd->add_option("--fire-seeds", o.fire_seeds)->check(CLI::NonNegativeNumber);
  cmd->add_option("--fire-steps", o.fire_steps)->check(CLI::NonNegativeNumber);
  cmd->add_option("--success-prob", o.success, "move success probability")->check(CLI::Range(0.0, 1.0));
}

void spear_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--predicates", o.predicates)->check(CLI::IsMember({"layout", "ball", "both"}));
  cmd->add_option("--n-ball", o.n_ball)->check(CLI::PositiveNumber);
  cmd->add_option("--r-min", o.r_min)->check(CLI::NonNegativeNumber);
  cmd->add_option("--r-max", o.r_max)->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-order", o.max_order)->check(CLI::PositiveNumber);
  cmd->add_option("--mode", o.mode)->check(CLI::IsMember({"det", "stoch"}));
  cmd->add_option("--k", o.k, "rollouts per divergence search")->check(CLI::PositiveNumber);
  cmd->add_option("--rl", o.rl, "reward floor");
  cmd->add_option("--epsilon", o.epsilon);
  cmd->add_option("--max-loops", o.max_loops)->check(CLI::PositiveNumber);
  cmd->add_flag("--hard", o.hard, "forbid predicates touching the desired path");
}

evac::DomainParams domain(const Options& o) {
  evac::DomainParams p;
  std::sscanf(o.size.c_str(), "%dx%d", &p.width, &p.height);
  p.n_rooms = o.rooms;
  p.n_hallways = o.hallways;
  p.n_exits = o.exits;
  p.fire_seeds = o.fire_seeds;
  p.fire_expansion_steps = o.fire_steps;
  p.move_success_prob = o.mode == "det" ? 1.0 : o.success;
  return p;
}

bench::PredicateSource source(const Options& o) {
  if (o.predicates == "ball") return bench::PredicateSource::ball;
  if (o.predicates == "both") return bench::PredicateSource::both;
  return bench::PredicateSource::layout;
}

SpearConfig spear_config(const Options& o) {
  SpearConfig c;
  c.n_rollouts = o.k;
  c.reward_floor = o.rl;
  c.epsilon = o.epsilon;
  c.max_outer_loops = o.max_loops;
  c.mode = o.mode == "det" ? RolloutMode::deterministic : RolloutMode::stochastic;
  c.hard_path_constraint = o.hard;
  c.seed = o.seed;
  return c;
}

bench::BenchConfig bench_config(const Options& o) {
  bench::BenchConfig b;
  b.domain = domain(o);
  b.domain.move_success_prob = o.success;
  b.source = source(o);
  b.n_ball = o.n_ball;
  b.ball_r_min = o.r_min;
  b.ball_r_max = o.r_max;
  b.max_order = o.max_order;
  b.seed = o.seed;
  b.spear = spear_config(o);
  b.threads = o.threads;
  return b;
}

// Writes to --out when given, stdout otherwise.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  write(f);
}

void episodes_json(const std::vector<bench::EpisodeRow>& rows, std::ostream& out) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows)
    a.push_back({{"map_seed", r.map_seed}, {"episode", r.episode}, {"mode", bench::mode_name(r.mode)},
                 {"reward_pre", r.reward_pre}, {"reward_post", r.reward_post}, {"case", r.case_id},
                 {"loops", r.loops}, {"cases", r.cases}, {"reward_opt", r.reward_opt}, {"start", r.start},
                 {"path_overlap", r.path_overlap},
                 {"reward_opt_final", r.reward_opt_final}});
  out << a.dump(1) << '\n';
}

void scaling_json(const std::vector<bench::ScalingRow>& rows, std::ostream& out) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows)
    a.push_back({{"map_seed", r.map_seed}, {"n_predicates", r.n_predicates}, {"case", r.case_id},
                 {"time_ms", r.time_ms}, {"loops", r.loops}, {"total_ms", r.total_ms}, {"parallel", r.parallel},
                 {"n_base", r.n_base}, {"n_states", r.n_states}, {"size", r.size}});
  out << a.dump(1) << '\n';
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

int run_scenario(const Options& o, const std::string& map_path, const std::string& start_text) {
  const evac::DomainParams params = domain(o);
  bench::Scenario sc = [&] {
    if (map_path.empty())
      return bench::build_scenario(params, o.seed, source(o), o.n_ball, o.r_min, o.r_max, o.max_order);
    const evac::EvacMap map = evac::load_map(std::filesystem::path(map_path));
    return bench::build_scenario(map, params, source(o), o.n_ball, o.r_min, o.r_max, o.max_order, o.seed);
  }();

  StateId start;
  if (!start_text.empty()) {
    int x, y;
    char comma;
    std::istringstream in(start_text);
    if (!(in >> x >> comma >> y) || comma != ',') throw CLI::ValidationError("--start", "expected x,y");
    start = sc.map.state_of({x, y});
    if (start < 0) throw CLI::ValidationError("--start", "start cell is a wall");
  } else if (sc.map.start()) {
    start = sc.map.state_of(*sc.map.start());
  } else {
    start = bench::episode_start(sc, o.seed, 0);
  }

  const SpearConfig cfg = spear_config(o);
  const Policy pre = value_iteration(sc.agent, sc.agent_reward, cfg.planner()).policy;
  const Policy opt = value_iteration(sc.world.mdp, sc.world.reward, cfg.planner()).policy;
  SpearResult res;
  try {
    res = run_spear(sc.world.mdp, sc.agent, sc.world.reward, sc.agent_reward, sc.predicates, cfg, start);
  } catch (const NoSolution& e) {
    std::cerr << "no solution: " << e.what() << '\n';
    return 2;
  }
  Policy post = pre;
  if (!res.feedback.empty())
    post = value_iteration(sc.agent, apply_feedback(sc.agent_reward, res.feedback), cfg.planner()).policy;
  const int n = sc.world.mdp.is_deterministic() ? 1 : 1000;
  const EpisodeReturns ret{expected_return(sc.world.mdp, pre, sc.world.reward, start, n, o.seed),
                           expected_return(sc.world.mdp, post, sc.world.reward, start, n, o.seed),
                           expected_return(sc.world.mdp, opt, sc.world.reward, start, n, o.seed)};

  if (o.format == "json") {
    emit(o.out, [&](std::ostream& out) { write_run_record(res, sc.map, ret, out); });
    return 0;
  }
  emit(o.out, [&](std::ostream& out) {
    const auto c = sc.map.cell_of(start);
    out << "start " << c.x << ',' << c.y << '\n';
    out << "cases";
    for (auto k : res.cases) out << ' ' << static_cast<int>(k);
    out << "\nloops " << res.loops.size() << '\n';
    out << "feedback " << (res.feedback.empty() ? "(none needed)" : res.feedback.message) << '\n';
    out << "return_before " << ret.pre << '\n';
    out << "return_after " << ret.post << '\n';
    out << "return_optimal " << ret.optimal << '\n';
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic reward feedback for policy repair in evacuation gridworlds"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-map", "generate a map (with fires) and write it");
  bool no_fires = false;
  std::string predicates_out;
  gen->add_option("--seed", o.seed);
  domain_flags(gen, o);
  gen->add_flag("--no-fires", no_fires);
  gen->add_option("--out", o.out, "map file (stdout when omitted)");
  gen->add_option("--predicates-out", predicates_out, "also write layout predicates as JSON");

  auto* run = app.add_subcommand("run-scenario", "run SPEAR once and print the feedback");
  std::string map_path, start_text;
  run->add_option("--seed", o.seed);
  run->add_option("--map", map_path, "map file; generated from the domain flags when omitted")
      ->check(CLI::ExistingFile);
  run->add_option("--start", start_text, "start cell x,y");
  domain_flags(run, o);
  spear_flags(run, o);
  run->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"csv", "text", "json"}));
  run->add_option("--out", o.out);

  auto* br = app.add_subcommand("bench-reward", "paired episode rewards before and after feedback");
  int maps = 20, episodes = 100;
  std::string modes = "both";
  br->add_option("--seed", o.seed);
  br->add_option("--maps", maps)->check(CLI::PositiveNumber);
  br->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  br->add_option("--modes", modes)->check(CLI::IsMember({"det", "stoch", "both"}));
  br->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  domain_flags(br, o);
  spear_flags(br, o);
  br->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));
  br->add_option("--out", o.out);

  auto* bp = app.add_subcommand("bench-predicates", "solver time against predicate count");
  std::string counts = "100,200,500,1000,2000";
  bool full = false;
  int repeats = 5;
  bp->add_option("--seed", o.seed);
  bp->add_option("--maps", maps)->check(CLI::PositiveNumber);
  bp->add_option("--counts", counts, "comma-separated predicate counts");
  bp->add_flag("--full", full, "extend counts up to 10000");
  bp->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  bp->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  domain_flags(bp, o);
  spear_flags(bp, o);
  bp->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));
  bp->add_option("--out", o.out);

  auto* bs = app.add_subcommand("bench-states", "end-to-end time against map size");
  std::string sizes = "15,25,40,60";
  int state_repeats = 10;
  bs->add_option("--seed", o.seed);
  bs->add_option("--sizes", sizes, "comma-separated side lengths");
  bs->add_option("--repeats", state_repeats)->check(CLI::PositiveNumber);
  bs->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  domain_flags(bs, o);
  spear_flags(bs, o);
  bs->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));
  bs->add_option("--out", o.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      evac::EvacMap map = evac::generate_map(domain(o), o.seed);
      if (!no_fires) map = evac::place_fires(map, o.fire_seeds, o.fire_steps, mix_seed(o.seed, 0xf17eULL));
      emit(o.out, [&](std::ostream& out) { evac::save_map(map, out); });
      if (!predicates_out.empty())
        emit(predicates_out, [&](std::ostream& out) { save_predicates(layout_predicates(map), map, out); });
      return 0;
    }
    if (*run) return run_scenario(o, map_path, start_text);
    if (*br) {
      bench::BenchConfig b = bench_config(o);
      b.n_maps = maps;
      b.n_episodes = episodes;
      if (br->count("--predicates") == 0) b.source = bench::PredicateSource::both;
      if (br->count("--modes") == 0 && br->count("--mode") > 0) modes = o.mode;
      if (modes == "det") b.modes = {RolloutMode::deterministic};
      if (modes == "stoch") b.modes = {RolloutMode::stochastic};
      const auto rows = bench::bench_episode_reward(b);
      emit(o.out, [&](std::ostream& out) {
        o.format == "json" ? episodes_json(rows, out) : bench::write_episode_csv(rows, out);
      });
      return 0;
    }
    if (*bp) {
      bench::BenchConfig b = bench_config(o);
      if (bp->count("--predicates") == 0) b.source = bench::PredicateSource::ball;
      if (bp->count("--max-order") == 0) b.max_order = 1;
      b.n_maps = maps;
      b.n_repeats = repeats;
      b.predicate_counts = parse_list(counts);
      if (full)
        for (int c : {3000, 5000, 7500, 10000}) b.predicate_counts.push_back(c);
      const auto rows = bench::bench_predicate_scaling(b);
      emit(o.out, [&](std::ostream& out) {
        o.format == "json" ? scaling_json(rows, out) : bench::write_scaling_csv(rows, out);
      });
      return 0;
    }
    if (*bs) {
      bench::BenchConfig b = bench_config(o);
      b.sizes = parse_list(sizes);
      // Shortest paths on 60x60 maps run past 50 steps; -100 still flags a first-step fire.
      if (bs->count("--rl") == 0) b.spear.reward_floor = -100.0;
      b.n_repeats = state_repeats;
      const auto rows = bench::bench_state_scaling(b);
      emit(o.out, [&](std::ostream& out) {
        o.format == "json" ? scaling_json(rows, out) : bench::write_scaling_csv(rows, out);
      });
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
