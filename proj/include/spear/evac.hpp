#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spear/mdp.hpp"

// Emergency-evacuation gridworld: procedural building layouts, fire placement and the
// slip dynamics used by the evaluation.
namespace spear::evac {

enum class CellType : char { wall = '#', floor = '.', exit = 'E', fire = 'F' };

struct Coord {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

struct Region {
  std::string name;
  std::vector<Coord> cells;
  friend bool operator==(const Region&, const Region&) = default;
};

struct Rewards {
  double exit = 100.0;
  double fire = -100.0;
  double step = -1.0;
};

struct DomainParams {
  int width = 25;
  int height = 25;
  int n_rooms = 5;
  int n_hallways = 10;
  int n_exits = 3;
  int fire_seeds = 3;
  int fire_expansion_steps = 2;
  double move_success_prob = 0.85;
  Rewards rewards;
  int max_attempts = 100;

  // Throws std::invalid_argument on n_exits < 1, width*height < 9 or a bad probability.
  void validate() const;
};

// Actions are indexed up, down, left, right.
enum Action : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumActions = 4;

class EvacMap {
 public:
  EvacMap() = default;
  EvacMap(int width, int height, CellType fill);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  CellType at(Coord c) const { return cells_[index(c)]; }
  // Changing a cell to or from wall renumbers the states.
  void set(Coord c, CellType t);

  std::vector<Region>& rooms() { return rooms_; }
  const std::vector<Region>& rooms() const { return rooms_; }
  std::vector<Region>& hallways() { return hallways_; }
  const std::vector<Region>& hallways() const { return hallways_; }

  // Exit cells in row-major order (derived from the grid).
  std::vector<Coord> exits() const { return cells_of(CellType::exit); }
  std::vector<Coord> fires() const { return cells_of(CellType::fire); }
  std::vector<Coord> cells_of(CellType t) const;

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t s) { seed_ = s; }

  const std::optional<Coord>& start() const { return start_; }
  void set_start(std::optional<Coord> c) { start_ = c; }

  // Dense state numbering over non-wall cells in row-major order.
  StateId state_of(Coord c) const;  // -1 for walls
  Coord cell_of(StateId s) const;
  std::size_t num_states() const { return state_cells_.size(); }

  // Copy with every fire cell turned back into floor.
  EvacMap without_fires() const;

  friend bool operator==(const EvacMap& a, const EvacMap& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.cells_ == b.cells_ && a.rooms_ == b.rooms_ &&
           a.hallways_ == b.hallways_ && a.seed_ == b.seed_ && a.start_ == b.start_;
  }


 private:
  void reindex();

  std::size_t index(Coord c) const { return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x); }

  int width_ = 0;
  int height_ = 0;
  std::vector<CellType> cells_;
  std::vector<Region> rooms_;
  std::vector<Region> hallways_;
  std::uint64_t seed_ = 0;
  std::optional<Coord> start_;
  std::vector<StateId> state_of_cell_;
  std::vector<Coord> state_cells_;
};

// Rooms are disjoint random rectangles (>= 2x2) joined by 1-cell L-shaped hallways;
// exits are carved into the outer wall. With n_rooms == 0 the whole grid is open floor.
// Deterministic in (params, seed). Throws GenerationFailure.
EvacMap generate_map(const DomainParams& params, std::uint64_t seed);

// Probability that a floor cell next to fire ignites during one expansion step.
inline constexpr double kFireSpreadProb = 0.5;

// Seeds `fire_seeds` distinct floor cells, then runs synchronous expansion steps.
// Exits never burn. Throws std::invalid_argument if the map already has fires.
EvacMap place_fires(const EvacMap& map, int fire_seeds, int expansion_steps, std::uint64_t seed);

// Breadth-first check that every floor cell reaches an exit through floor/exit cells.
// Fire cells are treated as floor.
bool exits_reachable(const EvacMap& map);

// Shortest 4-connected path lengths (in steps) from every cell to the nearest target cell,
// moving only through cells accepted by `passable`. -1 where unreachable.
std::vector<int> distance_to(const EvacMap& map, const std::vector<Coord>& targets,
                             bool (*passable)(CellType));

struct EvacModel {
  Mdp mdp;
  RewardFunction reward;
};

// Non-wall cells become states; exits and fires are terminal. Every transition pays the
// step reward plus the exit/fire reward of the cell it enters.
EvacModel to_mdp(const EvacMap& map, const DomainParams& params);

// Text map format: header lines, named region lines, then the grid.
void save_map(const EvacMap& map, std::ostream& out);
void save_map(const EvacMap& map, const std::filesystem::path& path);
EvacMap load_map(std::istream& in);
EvacMap load_map(const std::filesystem::path& path);

}  // namespace spear::evac
