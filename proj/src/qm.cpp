#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>

#include "spear/errors.hpp"
#include "spear/setcover.hpp"

namespace spear::cover {

namespace {

using Words = std::vector<std::uint64_t>;

struct Implicant {
  int id;
  double cost;
  Words minterms;  // bits over the target index, not over the state space
};

bool covers(const Words& a, std::size_t bit) { return (a[bit / 64] >> (bit % 64)) & 1U; }

bool subset(const Words& a, const Words& b) {
  for (std::size_t w = 0; w < a.size(); ++w)
    if (a[w] & ~b[w]) return false;
  return true;
}

// A product term in Petrick's expansion: bit i set means implicant i is taken.
using Term = std::uint32_t;

bool absorbs(Term a, Term b) { return (a & b) == a; }

void add_absorbing(std::vector<Term>& terms, Term t) {
  for (Term u : terms)
    if (absorbs(u, t)) return;
  std::erase_if(terms, [&](Term u) { return absorbs(t, u); });
  terms.push_back(t);
}

}  // namespace

std::optional<std::vector<int>> qm_exact_cover(std::span<const StateId> cover_states, const PredicateSet& predicates,
                                               std::size_t max_predicates) {
  if (predicates.size() > max_predicates)
    throw SizeLimit("exact-cover baseline is limited to " + std::to_string(max_predicates) + " predicates");

  StateSet target(predicates.num_states());
  for (StateId s : cover_states) target.insert(s);
  if (target.empty()) return std::vector<int>{};
  const std::vector<StateId> minterm_states = target.members();
  const std::size_t n = minterm_states.size();

  // Candidate implicants are predicates that never fire outside the target.
  std::vector<Implicant> cands;
  for (const Predicate& p : predicates) {
    if (p.extension.empty() || !p.extension.subset_of(target)) continue;
    Words m((n + 63) / 64, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (p.holds(minterm_states[i])) m[i / 64] |= std::uint64_t{1} << (i % 64);
    cands.push_back({p.id, p.cost, std::move(m)});
  }

  // Drop an implicant whose minterms sit inside a cheaper or equal-cost, lower-id one.
  std::vector<Implicant> primes;
  for (std::size_t a = 0; a < cands.size(); ++a) {
    bool dominated = false;
    for (std::size_t b = 0; b < cands.size() && !dominated; ++b) {
      if (a == b) continue;
      const bool better = cands[b].cost < cands[a].cost || (cands[b].cost == cands[a].cost && b < a);
      dominated = better && subset(cands[a].minterms, cands[b].minterms);
    }
    if (!dominated) primes.push_back(cands[a]);
  }

  std::vector<std::vector<int>> chart(n);  // minterm -> prime indices
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < primes.size(); ++k)
      if (covers(primes[k].minterms, i)) chart[i].push_back(static_cast<int>(k));
    if (chart[i].empty()) return std::nullopt;  // union of primes misses this state
  }

  Term essential = 0;
  for (const auto& row : chart)
    if (row.size() == 1) essential |= Term{1} << row[0];

  std::vector<Term> sop{essential};
  for (const auto& row : chart) {
    if (std::any_of(row.begin(), row.end(), [&](int k) { return (essential >> k) & 1U; })) continue;
    std::vector<Term> next;
    for (Term t : sop)
      for (int k : row) add_absorbing(next, t | (Term{1} << k));
    sop = std::move(next);
  }

  auto cost_of = [&](Term t) {
    double c = 0.0;
    for (std::size_t k = 0; k < primes.size(); ++k)
      if ((t >> k) & 1U) c += primes[k].cost;
    return c;
  };
  auto ids_of = [&](Term t) {
    std::vector<int> ids;
    for (std::size_t k = 0; k < primes.size(); ++k)
      if ((t >> k) & 1U) ids.push_back(primes[k].id);
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  Term best = sop.front();
  for (Term t : sop) {
    const int nt = std::popcount(t), nb = std::popcount(best);
    if (nt != nb) {
      if (nt < nb) best = t;
      continue;
    }
    const double ct = cost_of(t), cb = cost_of(best);
    if (ct != cb) {
      if (ct < cb) best = t;
      continue;
    }
    if (ids_of(t) < ids_of(best)) best = t;
  }
  return ids_of(best);
}

}  // namespace spear::cover
