#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "spear/predicates.hpp"
#include "spear/state_set.hpp"

// SPEAR-IP: choose predicates x_j in {0,1} minimizing
//   sum_j c_j x_j + L * sum_k sum_j v_kj x_j
// subject to sum_j u_ij x_j >= 1 for every state row i of U.
namespace spear::cover {

enum class Case { one = 1, two = 2, three = 3 };

struct IpInstance {
  BitMatrix u;                // |S| x |P|: state rows that must be covered
  BitMatrix v;                // |O| x |P|: desired-trajectory rows
  std::vector<double> costs;  // c_j > 0
  double penalty = 0.0;       // L > sum_j c_j

  std::size_t num_predicates() const { return costs.size(); }

  // Throws std::invalid_argument when dimensions disagree, a cost is not positive or
  // L <= sum of costs.
  void validate() const;

  // Builds from coverage matrices using each predicate's cost. L defaults to 1 + sum c_j.
  static IpInstance from(const CoverageMatrices& m, const PredicateSet& predicates,
                         std::optional<double> penalty = std::nullopt);
  static IpInstance make(BitMatrix u, BitMatrix v, std::vector<double> costs,
                         std::optional<double> penalty = std::nullopt);
};

struct SolveOptions {
  // Forbid every predicate that touches the desired trajectory instead of penalizing it.
  bool hard_path_constraint = false;
};

struct SetCoverSolution {
  std::vector<int> selected;  // column indices, ascending
  double objective = 0.0;     // +inf for case two
  Case kind = Case::two;
  std::size_t nodes = 0;      // branch-and-bound nodes visited (0 for other solvers)

  bool feasible() const { return kind != Case::two; }
};

// Objective evaluated literally: every (k, j) overlap with j selected adds L.
double objective_of(const IpInstance& inst, std::span<const int> selected);
bool covers_all_rows(const IpInstance& inst, std::span<const int> selected);
Case classify(const IpInstance& inst, double objective);

// Exact branch-and-bound with the greedy cover as incumbent. Equal objectives prefer
// fewer predicates, then the lexicographically smallest index set.
SetCoverSolution solve_spear_ip(const IpInstance& inst, const SolveOptions& options = {});

// Repeatedly takes the predicate minimizing (c_j + L * newly hit V rows) / newly covered U rows.
SetCoverSolution greedy_cover(const IpInstance& inst, const SolveOptions& options = {});

inline constexpr std::size_t kBruteForceLimit = 20;

// Enumerates all 2^|P| selections. Throws SizeLimit above kBruteForceLimit predicates.
SetCoverSolution brute_force_cover(const IpInstance& inst, const SolveOptions& options = {});

inline constexpr std::size_t kQmPredicateLimit = 24;

// Exact-cover baseline in the style of Quine-McCluskey: candidate implicants are the
// predicates whose extension lies inside the target set; after dominance reduction,
// essential implicants are fixed and Petrick's method picks the smallest completion
// (fewest predicates, then lowest cost). Returns nullopt when no selection reproduces the
// target exactly. Throws SizeLimit above max_predicates.
std::optional<std::vector<int>> qm_exact_cover(std::span<const StateId> cover_states, const PredicateSet& predicates,
                                               std::size_t max_predicates = kQmPredicateLimit);

// Plain-text instance dump: header, costs, then U and V as 0/1 rows.
void dump_instance(const IpInstance& inst, std::ostream& out);
IpInstance read_instance(std::istream& in);

}  // namespace spear::cover
