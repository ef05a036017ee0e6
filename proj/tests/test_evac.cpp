#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "spear/errors.hpp"
#include "spear/evac.hpp"

using namespace spear;
using namespace spear::evac;
using testing_support::source_path;

namespace {

DomainParams open5() {
  DomainParams p;
  p.width = 5;
  p.height = 5;
  p.n_rooms = 0;
  p.n_hallways = 0;
  p.n_exits = 1;
  return p;
}

}  // namespace

TEST_CASE("domain params validation") {
  DomainParams p;
  p.n_exits = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.width = 2;
  p.height = 4;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.move_success_prob = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.move_success_prob = 1.0;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("open 5x5 map has open floor and one boundary exit") {
  const EvacMap m = generate_map(open5(), 7);
  CHECK(m.width() == 5);
  CHECK(m.height() == 5);
  const auto exits = m.exits();
  REQUIRE(exits.size() == 1);
  const Coord e = exits[0];
  CHECK((e.x == 0 || e.y == 0 || e.x == 4 || e.y == 4));
  CHECK(m.fires().empty());
  int floor = 0;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) floor += m.at({x, y}) == CellType::floor;
  CHECK(floor >= 9);
  CHECK(exits_reachable(m));
}

TEST_CASE("generation is deterministic in the seed") {
  DomainParams p;
  CHECK(generate_map(p, 11) == generate_map(p, 11));
  CHECK_FALSE(generate_map(p, 11) == generate_map(p, 12));
}

TEST_CASE("40x40 map with 10 rooms, 40 hallways and 5 exits") {
  DomainParams p;
  p.width = 40;
  p.height = 40;
  p.n_rooms = 10;
  p.n_hallways = 40;
  p.n_exits = 5;
  const EvacMap m = generate_map(p, 3);
  CHECK(m.exits().size() == 5);
  CHECK(m.rooms().size() == 10);
}

TEST_CASE("generated maps keep every floor cell connected to an exit") {
  DomainParams p;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const EvacMap m = generate_map(p, seed);
    const auto d = oracle::grid_bfs(m, m.exits(), true);
    for (Coord c : m.cells_of(CellType::floor)) CHECK(d[static_cast<std::size_t>(c.y * m.width() + c.x)] > 0);
    for (Coord e : m.exits()) {
      // exits sit on the outer wall next to a walkable cell
      CHECK((e.x == 0 || e.y == 0 || e.x == m.width() - 1 || e.y == m.height() - 1));
    }
  }
}

TEST_CASE("impossible generation request fails") {
  DomainParams p;
  p.width = 4;
  p.height = 4;
  p.n_rooms = 6;
  p.max_attempts = 5;
  CHECK_THROWS_AS(generate_map(p, 1), GenerationFailure);
}

TEST_CASE("fire placement with zero seeds leaves the map unchanged") {
  const EvacMap m = generate_map(DomainParams{}, 5);
  CHECK(place_fires(m, 0, 3, 1) == m);
}

TEST_CASE("one fire seed and no expansion gives one fire") {
  const EvacMap m = generate_map(DomainParams{}, 5);
  CHECK(place_fires(m, 1, 0, 9).fires().size() == 1);
}

TEST_CASE("fire expansion matches the reference simulation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EvacMap m = generate_map(DomainParams{}, seed);
    const EvacMap burnt = place_fires(m, 2, 3, seed * 31 + 1);
    CHECK(burnt.fires() == oracle::reference_fires(m, 2, 3, seed * 31 + 1));
    // exits never burn and fires only replace former floor
    CHECK(burnt.exits() == m.exits());
    for (Coord c : burnt.fires()) CHECK(m.at(c) == CellType::floor);
  }
}

TEST_CASE("placing fires twice is rejected") {
  const EvacMap m = place_fires(generate_map(DomainParams{}, 5), 1, 0, 1);
  CHECK_THROWS_AS(place_fires(m, 1, 0, 1), std::invalid_argument);
}

TEST_CASE("fire seeds are clipped to the available floor") {
  const EvacMap m = testing_support::map_from("spear-map 1\nwidth 3\nheight 3\nexits 1\ngrid\n#E#\n#.#\n###\n");
  CHECK(place_fires(m, 10, 2, 1).fires().size() == 1);
}

TEST_CASE("deterministic dynamics at success probability 1") {
  DomainParams p = open5();
  p.move_success_prob = 1.0;
  const EvacMap m = generate_map(p, 7);
  const EvacModel model = to_mdp(m, p);
  CHECK(model.mdp.is_deterministic());
  const StateId s = m.state_of({2, 2});
  for (ActionId a = 0; a < kNumActions; ++a) CHECK(model.mdp.outcomes(s, a).size() == 1);
  CHECK(model.mdp.outcomes(s, kRight)[0].next == m.state_of({3, 2}));
}

TEST_CASE("interior slip distribution is 0.85 / 0.05 / 0.05 / 0.05") {
  DomainParams p = open5();
  const EvacMap m = generate_map(p, 7);
  const EvacModel model = to_mdp(m, p);
  const StateId s = m.state_of({2, 2});
  const auto out = model.mdp.outcomes(s, kUp);
  REQUIRE(out.size() == 4);
  for (const Outcome& o : out) {
    const double want = o.next == m.state_of({2, 1}) ? 0.85 : 0.05;
    CHECK(o.prob == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("moving into a wall keeps the mass on the current cell") {
  DomainParams p;
  const EvacMap m = testing_support::map_from(
      "spear-map 1\nwidth 5\nheight 3\nexits 1\ngrid\n#####\n#...E\n#####\n");
  const EvacModel model = to_mdp(m, p);
  const StateId s = m.state_of({1, 1});
  const auto out = model.mdp.outcomes(s, kLeft);
  double self = 0, total = 0;
  for (const Outcome& o : out) {
    total += o.prob;
    if (o.next == s) self += o.prob;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // left, up and down all bounce: 0.85 + 0.05 + 0.05
  CHECK(self == doctest::Approx(0.95).epsilon(1e-12));
}

TEST_CASE("to_mdp distributions sum to one and exits and fires are terminal") {
  DomainParams p;
  const EvacMap m = place_fires(generate_map(p, 8), 3, 2, 4);
  const EvacModel model = to_mdp(m, p);
  for (StateId s = 0; s < static_cast<StateId>(m.num_states()); ++s) {
    const CellType t = m.at(m.cell_of(s));
    if (t == CellType::exit || t == CellType::fire) {
      CHECK(model.mdp.is_terminal(s));
      continue;
    }
    for (ActionId a = 0; a < kNumActions; ++a) {
      double total = 0;
      for (const Outcome& o : model.mdp.outcomes(s, a)) total += o.prob;
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
  for (Coord c : m.exits()) CHECK(model.reward.entry(m.state_of(c)) == 99.0);
  for (Coord c : m.fires()) CHECK(model.reward.entry(m.state_of(c)) == -101.0);
}

TEST_CASE("map round trip through text") {
  DomainParams p;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EvacMap m = place_fires(generate_map(p, seed), 2, 1, seed);
    m.set_start(m.cell_of(0));
    std::ostringstream out;
    save_map(m, out);
    std::istringstream in(out.str());
    const EvacMap back = load_map(in);
    CHECK(back == m);
    std::ostringstream again;
    save_map(back, again);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("map file with zero exits is a parse error") {
  CHECK_THROWS_AS(load_map(source_path("tests/fixtures/no_exit.map")), ParseError);
}

TEST_CASE("malformed map text reports line and field") {
  try {
    testing_support::map_from("spear-map 1\nwidth 3\nheight x\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "height");
  }
  CHECK_THROWS_AS(testing_support::map_from("spear-map 1\nwidth 3\nheight 1\nexits 1\ngrid\n#Q#\n"), ParseError);
  CHECK_THROWS_AS(testing_support::map_from("not a map\n"), ParseError);
}

TEST_CASE("hand-written 3x3 fixture loads with the expected cells") {
  const EvacMap m = load_map(source_path("tests/fixtures/tiny_3x3.map"));
  CHECK(m.seed() == 42);
  CHECK(m.at({1, 0}) == CellType::exit);
  CHECK(m.at({1, 1}) == CellType::floor);
  CHECK(m.at({1, 2}) == CellType::fire);
  CHECK(m.at({0, 0}) == CellType::wall);
  CHECK(m.num_states() == 3);
  REQUIRE(m.rooms().size() == 1);
  CHECK(m.rooms()[0].name == "the cell");
  CHECK(m.without_fires().at({1, 2}) == CellType::floor);
}

TEST_CASE("distance_to agrees with an independent BFS") {
  const EvacMap m = place_fires(generate_map(DomainParams{}, 21), 3, 2, 2);
  const auto mine = oracle::grid_bfs(m, m.exits(), false);
  const auto lib = distance_to(m, m.exits(), [](CellType t) { return t == CellType::floor; });
  for (Coord c : m.cells_of(CellType::floor)) {
    const auto i = static_cast<std::size_t>(c.y * m.width() + c.x);
    CHECK(mine[i] == lib[i]);
  }
}
