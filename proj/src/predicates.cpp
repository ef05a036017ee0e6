#include "spear/predicates.hpp"

#include <algorithm>
#include <cstdlib>
#include <json.hpp>
#include <stdexcept>

#include "spear/errors.hpp"
#include "spear/rng.hpp"

namespace spear {

using evac::CellType;
using evac::Coord;
using evac::EvacMap;

const Predicate& PredicateSet::add(std::string description, double cost, StateSet extension, std::vector<int> members) {
  if (description.empty()) throw std::invalid_argument("predicate description must be non-empty");
  if (!(cost > 0.0)) throw std::invalid_argument("predicate '" + description + "' needs a positive cost");
  if (extension.size() != n_states_) throw std::invalid_argument("predicate extension has the wrong width");
  const int id = static_cast<int>(items_.size());
  if (members.empty()) members.push_back(id);
  items_.push_back({id, std::move(description), cost, std::move(extension), std::move(members)});
  return items_.back();
}

PredicateSet PredicateSet::merged(const PredicateSet& other) const {
  if (other.n_states_ != n_states_) throw std::invalid_argument("predicate sets span different state spaces");
  PredicateSet out(n_states_);
  for (const Predicate& p : *this) out.add(p.description, p.cost, p.extension, p.members);
  const int shift = static_cast<int>(size());
  for (const Predicate& p : other) {
    std::vector<int> members = p.members;
    for (int& m : members) m += shift;
    out.add(p.description, p.cost, p.extension, std::move(members));
  }
  return out;
}

double default_cost(const std::string& description) {
  return std::max<double>(1.0, static_cast<double>(description.size()));
}

double default_cost(const Predicate& p) { return default_cost(p.description); }

namespace {

StateSet extension_of(const EvacMap& map, const std::vector<Coord>& cells) {
  StateSet ext(map.num_states());
  for (Coord c : cells) {
    const StateId s = map.state_of(c);
    if (s >= 0) ext.insert(s);
  }
  return ext;
}

}  // namespace

PredicateSet layout_predicates(const EvacMap& map) {
  PredicateSet out(map.num_states());
  auto add_region = [&](const evac::Region& r) {
    StateSet ext = extension_of(map, r.cells);
    if (ext.empty()) return;
    std::string desc = "in " + r.name;
    const double cost = default_cost(desc);
    out.add(std::move(desc), cost, std::move(ext));
  };
  for (const auto& r : map.rooms()) add_region(r);
  for (const auto& r : map.hallways()) add_region(r);
  const auto exits = map.exits();
  for (std::size_t i = 0; i < exits.size(); ++i) {
    std::string desc = "at exit " + std::to_string(i + 1);
    const double cost = default_cost(desc);
    out.add(std::move(desc), cost, extension_of(map, {exits[i]}));
  }
  return out;
}

PredicateSet ball_predicates(const EvacMap& map, int n, int r_min, int r_max, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("ball_predicates needs n >= 1");
  if (r_min < 0 || r_max < r_min) throw std::invalid_argument("ball radii must satisfy 0 <= r_min <= r_max");
  const auto n_states = static_cast<StateId>(map.num_states());
  Rng rng(seed);
  PredicateSet out(map.num_states());
  for (int i = 0; i < n; ++i) {
    const Coord center = map.cell_of(static_cast<StateId>(rng.index(static_cast<std::uint64_t>(n_states))));
    const int radius = rng.between(r_min, r_max);
    StateSet ext(map.num_states());
    for (StateId s = 0; s < n_states; ++s) {
      const Coord c = map.cell_of(s);
      if (std::abs(c.x - center.x) + std::abs(c.y - center.y) <= radius) ext.insert(s);
    }
    std::string desc =
        "within " + std::to_string(radius) + " of " + std::to_string(center.x) + "," + std::to_string(center.y);
    const double cost = default_cost(desc);
    out.add(std::move(desc), cost, std::move(ext));
  }
  return out;
}

PredicateSet compose(const PredicateSet& base, int max_order, std::size_t cap) {
  if (max_order < 1) throw std::invalid_argument("max_order must be >= 1");
  if (base.size() > cap) throw CombinatorialLimit("base set already exceeds the composite cap");
  PredicateSet out(base.num_states());
  for (const Predicate& p : base) out.add(p.description, p.cost, p.extension, p.members);

  const std::size_t n = base.size();
  // Depth-first over increasing index tuples; an empty intersection prunes its subtree.
  struct Frame {
    std::vector<std::size_t> picked;
    StateSet ext;
  };
  for (int order = 2; order <= max_order && static_cast<std::size_t>(order) <= n; ++order) {
    std::vector<Frame> stack;
    for (std::size_t i = n; i-- > 0;) stack.push_back({{i}, base[i].extension});
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (f.picked.size() == static_cast<std::size_t>(order)) {
        if (out.size() >= cap)
          throw CombinatorialLimit("composite predicates exceed the cap of " + std::to_string(cap));
        std::string desc;
        double cost = 0.0;
        std::vector<int> members;
        for (std::size_t k = 0; k < f.picked.size(); ++k) {
          const Predicate& p = base[f.picked[k]];
          if (k) desc += " AND ";
          desc += p.description;
          cost += p.cost;
          members.insert(members.end(), p.members.begin(), p.members.end());
        }
        out.add(std::move(desc), cost, std::move(f.ext), std::move(members));
        continue;
      }
      for (std::size_t j = n; j-- > f.picked.back() + 1;) {
        StateSet ext = f.ext & base[j].extension;
        if (ext.empty()) continue;
        Frame child{f.picked, std::move(ext)};
        child.picked.push_back(j);
        stack.push_back(std::move(child));
      }
    }
  }
  return out;
}

CoverageMatrices build_coverage_matrices(std::span<const StateId> cover_states,
                                         std::span<const StateId> desired_states, const PredicateSet& predicates) {
  if (predicates.empty()) throw std::invalid_argument("coverage matrices need at least one predicate");
  CoverageMatrices m;
  m.state_of_u_row.assign(cover_states.begin(), cover_states.end());
  std::sort(m.state_of_u_row.begin(), m.state_of_u_row.end());
  m.state_of_u_row.erase(std::unique(m.state_of_u_row.begin(), m.state_of_u_row.end()), m.state_of_u_row.end());
  m.state_of_v_row.assign(desired_states.begin(), desired_states.end());
  std::sort(m.state_of_v_row.begin(), m.state_of_v_row.end());
  m.state_of_v_row.erase(std::unique(m.state_of_v_row.begin(), m.state_of_v_row.end()), m.state_of_v_row.end());

  const std::size_t cols = predicates.size();
  m.predicate_of_column.resize(cols);
  m.u = BitMatrix(m.state_of_u_row.size(), cols);
  m.v = BitMatrix(m.state_of_v_row.size(), cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const Predicate& p = predicates[j];
    m.predicate_of_column[j] = p.id;
    for (std::size_t i = 0; i < m.state_of_u_row.size(); ++i)
      if (p.holds(m.state_of_u_row[i])) m.u.set(i, j);
    for (std::size_t k = 0; k < m.state_of_v_row.size(); ++k)
      if (p.holds(m.state_of_v_row[k])) m.v.set(k, j);
  }
  return m;
}

CoverageMatrices build_coverage_matrices(std::span<const StateId> cover_states, const Trajectory& desired,
                                         const PredicateSet& predicates) {
  const auto states = desired.states();
  return build_coverage_matrices(cover_states, std::span<const StateId>(states), predicates);
}

void save_predicates(const PredicateSet& predicates, const EvacMap& map, std::ostream& out) {
  nlohmann::json doc;
  doc["format"] = "spear-predicates 1";
  doc["n_states"] = predicates.num_states();
  auto& list = doc["predicates"] = nlohmann::json::array();
  for (const Predicate& p : predicates) {
    nlohmann::json cells = nlohmann::json::array();
    p.extension.for_each([&](StateId s) {
      const Coord c = map.cell_of(s);
      cells.push_back({c.x, c.y});
    });
    list.push_back({{"id", p.id}, {"description", p.description}, {"cost", p.cost}, {"members", p.members},
                    {"cells", std::move(cells)}});
  }
  out << doc.dump(1) << '\n';
}

PredicateSet load_predicates(std::istream& in, const EvacMap& map) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, "json", e.what());
  }
  if (doc.value("format", "") != "spear-predicates 1") throw ParseError(0, "format", "not a predicate file");
  PredicateSet out(map.num_states());
  try {
    for (const auto& item : doc.at("predicates")) {
      StateSet ext(map.num_states());
      for (const auto& c : item.at("cells")) {
        const StateId s = map.state_of({c.at(0).get<int>(), c.at(1).get<int>()});
        if (s < 0) throw ParseError(0, "cells", "predicate cell is not a map state");
        ext.insert(s);
      }
      out.add(item.at("description").get<std::string>(), item.at("cost").get<double>(), std::move(ext),
              item.at("members").get<std::vector<int>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, "predicates", e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, "predicates", e.what());
  }
  return out;
}

}  // namespace spear
