#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spear/evac.hpp"
#include "spear/mdp.hpp"
#include "spear/state_set.hpp"

namespace spear {

// Boolean state classifier with a communicable description and a cost. The extension is
// precomputed over the state space, so membership queries are bit tests.
struct Predicate {
  int id = 0;
  std::string description;
  double cost = 1.0;
  StateSet extension;
  std::vector<int> members;  // base-predicate ids; a singleton for base predicates

  bool holds(StateId s) const { return extension.contains(s); }
  bool is_composite() const { return members.size() > 1; }
};

// Ordered predicate collection over a fixed state space; ids equal positions.
class PredicateSet {
 public:
  PredicateSet() = default;
  explicit PredicateSet(std::size_t n_states) : n_states_(n_states) {}

  // Appends a predicate, assigning the next id. Throws std::invalid_argument when the
  // cost is not positive, the description is empty or the extension has the wrong width.
  const Predicate& add(std::string description, double cost, StateSet extension, std::vector<int> members = {});

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t num_states() const { return n_states_; }
  const Predicate& operator[](std::size_t i) const { return items_[i]; }
  const Predicate& at(std::size_t i) const { return items_.at(i); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // Concatenation with ids renumbered after this set's.
  PredicateSet merged(const PredicateSet& other) const;

 private:
  std::size_t n_states_ = 0;
  std::vector<Predicate> items_;
};

// max(1, character length of the description).
double default_cost(const Predicate& p);
double default_cost(const std::string& description);

// One predicate per room, hallway and exit, described "in <room/hallway name>" / "at exit <k>".
PredicateSet layout_predicates(const evac::EvacMap& map);

// n balls with uniform non-wall centers and uniform radii in [r_min, r_max]; the
// extension is every non-wall cell within that Manhattan distance of the center.
PredicateSet ball_predicates(const evac::EvacMap& map, int n, int r_min, int r_max, std::uint64_t seed);

inline constexpr std::size_t kDefaultCompositeCap = 1'000'000;

// Every conjunction of at most max_order input predicates with a non-empty extension.
// Output starts with the inputs, then larger subsets in lexicographic order. A composite
// costs the sum of its members and reads "<a> AND <b>". Throws CombinatorialLimit.
PredicateSet compose(const PredicateSet& base, int max_order, std::size_t cap = kDefaultCompositeCap);

// U is |cover| x |P| with rows in ascending state order; V is |O| x |P| over the distinct
// states of the desired trajectory, also ascending.
struct CoverageMatrices {
  BitMatrix u;
  BitMatrix v;
  std::vector<StateId> state_of_u_row;
  std::vector<StateId> state_of_v_row;
  std::vector<int> predicate_of_column;
};

CoverageMatrices build_coverage_matrices(std::span<const StateId> cover_states, const Trajectory& desired,
                                         const PredicateSet& predicates);
CoverageMatrices build_coverage_matrices(std::span<const StateId> cover_states,
                                         std::span<const StateId> desired_states, const PredicateSet& predicates);

// JSON serialization with extensions written as map cells.
void save_predicates(const PredicateSet& predicates, const evac::EvacMap& map, std::ostream& out);
PredicateSet load_predicates(std::istream& in, const evac::EvacMap& map);

}  // namespace spear
