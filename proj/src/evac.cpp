#include "spear/evac.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <optional>
#include <stdexcept>

#include "spear/errors.hpp"
#include "spear/rng.hpp"

namespace spear::evac {

namespace {

constexpr std::array<Coord, 4> kDirs{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};

Coord step(Coord c, int dir) { return {c.x + kDirs[dir].x, c.y + kDirs[dir].y}; }

struct Rect {
  int x, y, w, h;
  bool contains(Coord c) const { return c.x >= x && c.x < x + w && c.y >= y && c.y < y + h; }
  // True when the rectangles touch or overlap (a one-cell wall gap is required).
  bool crowds(const Rect& o) const {
    return x - 1 < o.x + o.w && o.x - 1 < x + w && y - 1 < o.y + o.h && o.y - 1 < y + h;
  }
};

std::vector<Coord> l_path(Coord from, Coord to, bool horizontal_first) {
  std::vector<Coord> path;
  Coord c = from;
  path.push_back(c);
  auto walk_x = [&] {
    while (c.x != to.x) {
      c.x += (to.x > c.x) ? 1 : -1;
      path.push_back(c);
    }
  };
  auto walk_y = [&] {
    while (c.y != to.y) {
      c.y += (to.y > c.y) ? 1 : -1;
      path.push_back(c);
    }
  };
  if (horizontal_first) {
    walk_x();
    walk_y();
  } else {
    walk_y();
    walk_x();
  }
  return path;
}

Coord random_cell(Rng& rng, const Rect& r) { return {rng.between(r.x, r.x + r.w - 1), rng.between(r.y, r.y + r.h - 1)}; }

// Picks k distinct items with a partial Fisher-Yates shuffle.
template <typename T>
std::vector<T> choose(std::vector<T> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::optional<EvacMap> open_layout(const DomainParams& p, Rng& rng) {
  EvacMap m(p.width, p.height, CellType::floor);
  for (int h = 0; h < p.n_hallways; ++h) {
    const Rect all{0, 0, p.width, p.height};
    const Coord a = random_cell(rng, all);
    const Coord b = random_cell(rng, all);
    m.hallways().push_back({"hallway " + std::to_string(h + 1), l_path(a, b, rng.bernoulli(0.5))});
  }
  std::vector<Coord> border;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      if (x == 0 || y == 0 || x == p.width - 1 || y == p.height - 1) border.push_back({x, y});
  if (border.size() < static_cast<std::size_t>(p.n_exits)) return std::nullopt;
  for (Coord c : choose(border, static_cast<std::size_t>(p.n_exits), rng)) m.set(c, CellType::exit);
  return m;
}

std::optional<EvacMap> room_layout(const DomainParams& p, Rng& rng) {
  if (p.width < 4 || p.height < 4) return std::nullopt;
  EvacMap m(p.width, p.height, CellType::wall);
  const int max_side = std::max(2, std::min(p.width, p.height) / 5);

  std::vector<Rect> rooms;
  for (int r = 0; r < p.n_rooms; ++r) {
    bool placed = false;
    for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
      const int w = rng.between(2, max_side);
      const int h = rng.between(2, max_side);
      if (w > p.width - 2 || h > p.height - 2) continue;
      const Rect cand{rng.between(1, p.width - 1 - w), rng.between(1, p.height - 1 - h), w, h};
      if (std::any_of(rooms.begin(), rooms.end(), [&](const Rect& o) { return cand.crowds(o); })) continue;
      rooms.push_back(cand);
      placed = true;
    }
    if (!placed) return std::nullopt;
  }
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    Region region{"room " + std::to_string(r + 1), {}};
    for (int y = rooms[r].y; y < rooms[r].y + rooms[r].h; ++y)
      for (int x = rooms[r].x; x < rooms[r].x + rooms[r].w; ++x) {
        m.set({x, y}, CellType::floor);
        region.cells.push_back({x, y});
      }
    m.rooms().push_back(std::move(region));
  }

  auto in_room = [&](Coord c) {
    return std::any_of(rooms.begin(), rooms.end(), [&](const Rect& r) { return r.contains(c); });
  };

  // A chain through a random room order comes first so the layout is connected
  // whenever n_hallways >= n_rooms - 1.
  std::vector<std::size_t> order(rooms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  order = choose(order, order.size(), rng);

  const Rect interior{1, 1, p.width - 2, p.height - 2};
  for (int h = 0; h < p.n_hallways; ++h) {
    Coord a, b;
    if (rooms.size() >= 2) {
      std::size_t ra, rb;
      if (static_cast<std::size_t>(h) + 1 < rooms.size()) {
        ra = order[static_cast<std::size_t>(h)];
        rb = order[static_cast<std::size_t>(h) + 1];
      } else {
        ra = static_cast<std::size_t>(rng.index(rooms.size()));
        rb = static_cast<std::size_t>(rng.index(rooms.size() - 1));
        if (rb >= ra) ++rb;
      }
      a = random_cell(rng, rooms[ra]);
      b = random_cell(rng, rooms[rb]);
    } else if (rooms.size() == 1) {
      a = random_cell(rng, rooms[0]);
      b = random_cell(rng, interior);
    } else {
      a = random_cell(rng, interior);
      b = random_cell(rng, interior);
    }
    Region region{"", {}};
    for (Coord c : l_path(a, b, rng.bernoulli(0.5))) {
      m.set(c, CellType::floor);
      if (!in_room(c) && std::find(region.cells.begin(), region.cells.end(), c) == region.cells.end())
        region.cells.push_back(c);
    }
    if (region.cells.empty()) continue;
    region.name = "hallway " + std::to_string(m.hallways().size() + 1);
    m.hallways().push_back(std::move(region));
  }

  std::vector<Coord> doors;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      const bool corner = (x == 0 || x == p.width - 1) && (y == 0 || y == p.height - 1);
      const bool border = x == 0 || y == 0 || x == p.width - 1 || y == p.height - 1;
      if (!border || corner) continue;
      for (int d = 0; d < 4; ++d) {
        const Coord n = step({x, y}, d);
        if (m.in_bounds(n) && m.at(n) == CellType::floor) {
          doors.push_back({x, y});
          break;
        }
      }
    }
  if (doors.size() < static_cast<std::size_t>(p.n_exits)) return std::nullopt;
  for (Coord c : choose(doors, static_cast<std::size_t>(p.n_exits), rng)) m.set(c, CellType::exit);
  return m;
}

}  // namespace

void DomainParams::validate() const {
  if (n_exits < 1) throw std::invalid_argument("n_exits must be >= 1");
  if (width < 1 || height < 1 || width * height < 9) throw std::invalid_argument("width * height must be >= 9");
  if (!(move_success_prob > 0.0 && move_success_prob <= 1.0))
    throw std::invalid_argument("move_success_prob must lie in (0, 1]");
  if (n_rooms < 0 || n_hallways < 0 || fire_seeds < 0 || fire_expansion_steps < 0)
    throw std::invalid_argument("counts must be non-negative");
}

EvacMap::EvacMap(int width, int height, CellType fill)
    : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
  reindex();
}

void EvacMap::set(Coord c, CellType t) {
  CellType& cell = cells_[index(c)];
  const bool renumber = (cell == CellType::wall) != (t == CellType::wall);
  cell = t;
  if (renumber) reindex();
}

std::vector<Coord> EvacMap::cells_of(CellType t) const {
  std::vector<Coord> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (at({x, y}) == t) out.push_back({x, y});
  return out;
}

void EvacMap::reindex() {
  state_of_cell_.assign(cells_.size(), -1);
  state_cells_.clear();
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (at({x, y}) != CellType::wall) {
        state_of_cell_[index({x, y})] = static_cast<StateId>(state_cells_.size());
        state_cells_.push_back({x, y});
      }
}

StateId EvacMap::state_of(Coord c) const {
  if (!in_bounds(c)) return -1;
  return state_of_cell_[index(c)];
}

Coord EvacMap::cell_of(StateId s) const {
  return state_cells_.at(static_cast<std::size_t>(s));
}

EvacMap EvacMap::without_fires() const {
  EvacMap m = *this;
  for (auto& c : m.cells_)
    if (c == CellType::fire) c = CellType::floor;
  return m;
}

std::vector<int> distance_to(const EvacMap& map, const std::vector<Coord>& targets, bool (*passable)(CellType)) {
  std::vector<int> dist(static_cast<std::size_t>(map.width()) * static_cast<std::size_t>(map.height()), -1);
  auto idx = [&](Coord c) { return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(map.width()) + static_cast<std::size_t>(c.x); };
  std::deque<Coord> queue;
  for (Coord t : targets) {
    if (dist[idx(t)] == 0) continue;
    dist[idx(t)] = 0;
    queue.push_back(t);
  }
  while (!queue.empty()) {
    const Coord c = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      const Coord n = step(c, d);
      if (!map.in_bounds(n) || dist[idx(n)] >= 0 || !passable(map.at(n))) continue;
      dist[idx(n)] = dist[idx(c)] + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

bool exits_reachable(const EvacMap& map) {
  const auto exits = map.exits();
  if (exits.empty()) return false;
  const auto dist = distance_to(map, exits, [](CellType t) { return t != CellType::wall; });
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      const CellType t = map.at({x, y});
      if ((t == CellType::floor || t == CellType::fire) &&
          dist[static_cast<std::size_t>(y) * static_cast<std::size_t>(map.width()) + static_cast<std::size_t>(x)] < 0)
        return false;
    }
  return true;
}

EvacMap generate_map(const DomainParams& params, std::uint64_t seed) {
  params.validate();
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    auto m = params.n_rooms == 0 ? open_layout(params, rng) : room_layout(params, rng);
    if (!m || !exits_reachable(*m)) continue;
    m->set_seed(seed);
    return *std::move(m);
  }
  throw GenerationFailure("no connected layout after " + std::to_string(params.max_attempts) + " attempts");
}

EvacMap place_fires(const EvacMap& map, int fire_seeds, int expansion_steps, std::uint64_t seed) {
  if (fire_seeds < 0 || expansion_steps < 0) throw std::invalid_argument("fire counts must be non-negative");
  if (!map.fires().empty()) throw std::invalid_argument("map already has fires");
  EvacMap out = map;
  Rng rng(seed);
  for (Coord c : choose(map.cells_of(CellType::floor), static_cast<std::size_t>(fire_seeds), rng))
    out.set(c, CellType::fire);

  for (int s = 0; s < expansion_steps; ++s) {
    std::vector<Coord> ignite;
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) {
        if (out.at({x, y}) != CellType::floor) continue;
        bool near_fire = false;
        for (int d = 0; d < 4 && !near_fire; ++d) {
          const Coord n = step({x, y}, d);
          near_fire = out.in_bounds(n) && out.at(n) == CellType::fire;
        }
        if (near_fire && rng.bernoulli(kFireSpreadProb)) ignite.push_back({x, y});
      }
    for (Coord c : ignite) out.set(c, CellType::fire);
  }
  return out;
}

EvacModel to_mdp(const EvacMap& map, const DomainParams& params) {
  const double p = params.move_success_prob;
  const double slip = (1.0 - p) / 3.0;
  const std::size_t n = map.num_states();
  Mdp::Builder builder(n, kNumActions);
  RewardFunction reward(n, params.rewards.step);

  for (StateId s = 0; s < static_cast<StateId>(n); ++s) {
    const Coord c = map.cell_of(s);
    const CellType t = map.at(c);
    if (t == CellType::exit) {
      reward.set_entry(s, params.rewards.step + params.rewards.exit);
      continue;
    }
    if (t == CellType::fire) {
      reward.set_entry(s, params.rewards.step + params.rewards.fire);
      continue;
    }
    for (int a = 0; a < kNumActions; ++a) {
      std::vector<Outcome> dist;
      for (int d = 0; d < 4; ++d) {
        Coord next = step(c, d);
        if (!map.in_bounds(next) || map.at(next) == CellType::wall) next = c;
        dist.push_back({map.state_of(next), d == a ? p : slip});
      }
      builder.set(s, a, std::move(dist));
    }
  }
  return {std::move(builder).build(), std::move(reward)};
}

}  // namespace spear::evac
