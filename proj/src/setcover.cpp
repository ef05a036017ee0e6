#include "spear/setcover.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "spear/errors.hpp"

namespace spear::cover {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Words = std::vector<std::uint64_t>;

std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

bool same_objective(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

// (objective, size, lexicographic indices) ordering shared by every exact solver.
bool preferred(double obj, const std::vector<int>& sel, double best_obj, const std::vector<int>& best_sel) {
  if (!same_objective(obj, best_obj)) return obj < best_obj;
  if (sel.size() != best_sel.size()) return sel.size() < best_sel.size();
  return std::lexicographical_compare(sel.begin(), sel.end(), best_sel.begin(), best_sel.end());
}

// Column view of U and V restricted to what the solvers need.
struct Columns {
  std::size_t rows = 0;        // |U rows|
  std::size_t stride = 0;      // words per U mask
  std::vector<Words> u_mask;   // per column: covered U rows
  std::vector<Words> v_mask;   // per column: touched V rows
  std::vector<std::size_t> v_count;
  std::vector<char> allowed;

  explicit Columns(const IpInstance& inst, const SolveOptions& opt)
      : rows(inst.u.rows()), stride(words_for(inst.u.rows())) {
    const std::size_t p = inst.num_predicates();
    const std::size_t vstride = words_for(inst.v.rows());
    u_mask.assign(p, Words(stride, 0));
    v_mask.assign(p, Words(vstride, 0));
    v_count.assign(p, 0);
    allowed.assign(p, 1);
    for (std::size_t i = 0; i < inst.u.rows(); ++i)
      for (std::size_t j = 0; j < p; ++j)
        if (inst.u.get(i, j)) u_mask[j][i / 64] |= std::uint64_t{1} << (i % 64);
    for (std::size_t k = 0; k < inst.v.rows(); ++k)
      for (std::size_t j = 0; j < p; ++j)
        if (inst.v.get(k, j)) {
          v_mask[j][k / 64] |= std::uint64_t{1} << (k % 64);
          ++v_count[j];
        }
    if (opt.hard_path_constraint)
      for (std::size_t j = 0; j < p; ++j)
        if (v_count[j] > 0) allowed[j] = 0;
  }

  Words all_rows() const {
    Words w(stride, ~std::uint64_t{0});
    if (rows % 64) w.back() = (std::uint64_t{1} << (rows % 64)) - 1;
    if (rows == 0) w.assign(stride, 0);
    return w;
  }

  bool feasible() const {
    Words acc(stride, 0);
    for (std::size_t j = 0; j < u_mask.size(); ++j)
      if (allowed[j])
        for (std::size_t w = 0; w < stride; ++w) acc[w] |= u_mask[j][w];
    return acc == all_rows();
  }
};

std::size_t and_count(const Words& a, const Words& b) {
  std::size_t n = 0;
  for (std::size_t w = 0; w < a.size(); ++w) n += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
  return n;
}

bool subset_of(const Words& a, const Words& b) {
  for (std::size_t w = 0; w < a.size(); ++w)
    if (a[w] & ~b[w]) return false;
  return true;
}

SetCoverSolution infeasible() {
  SetCoverSolution s;
  s.objective = kInf;
  s.kind = Case::two;
  return s;
}

SetCoverSolution finish(const IpInstance& inst, std::vector<int> selected) {
  std::sort(selected.begin(), selected.end());
  SetCoverSolution s;
  s.objective = objective_of(inst, selected);
  s.selected = std::move(selected);
  s.kind = classify(inst, s.objective);
  return s;
}

class BranchAndBound {
 public:
  struct Col {
    int index;
    double weight;
    Words rows;
  };

  BranchAndBound(std::vector<Col> cols, std::size_t stride, double incumbent, std::vector<int> incumbent_sel)
      : cols_(std::move(cols)), stride_(stride), best_obj_(incumbent), best_sel_(std::move(incumbent_sel)),
        excluded_(cols_.size(), 0) {}

  void run(Words uncovered) { search(0.0, uncovered); }

  double best_objective() const { return best_obj_; }
  const std::vector<int>& best_selection() const { return best_sel_; }
  std::size_t nodes() const { return nodes_; }

 private:
  static bool empty(const Words& w) {
    return std::all_of(w.begin(), w.end(), [](std::uint64_t x) { return x == 0; });
  }

  void search(double cost, const Words& uncovered) {
    ++nodes_;
    if (empty(uncovered)) {
      std::vector<int> sel = chosen_;
      std::sort(sel.begin(), sel.end());
      if (preferred(cost, sel, best_obj_, best_sel_)) {
        best_obj_ = cost;
        best_sel_ = std::move(sel);
      }
      return;
    }

    // Fractional completion bound: charge every uncovered row the cheapest per-row price
    // any available column offers on it. Any cover pays at least this much.
    row_price_.assign(stride_ * 64, kInf);
    int branch = -1;
    double branch_ratio = -1.0;
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      if (excluded_[c]) continue;
      const std::size_t k = and_count(cols_[c].rows, uncovered);
      if (k == 0) continue;
      const double price = cols_[c].weight / static_cast<double>(k);
      for (std::size_t w = 0; w < stride_; ++w) {
        std::uint64_t bits = cols_[c].rows[w] & uncovered[w];
        while (bits) {
          const std::size_t i = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
          row_price_[i] = std::min(row_price_[i], price);
          bits &= bits - 1;
        }
      }
      const double ratio = static_cast<double>(k) / cols_[c].weight;
      if (ratio > branch_ratio) {
        branch_ratio = ratio;
        branch = static_cast<int>(c);
      }
    }
    double bound = cost;
    for (std::size_t w = 0; w < stride_; ++w) {
      std::uint64_t bits = uncovered[w];
      while (bits) {
        const double p = row_price_[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))];
        if (p == kInf) return;  // some row can no longer be covered
        bound += p;
        bits &= bits - 1;
      }
    }
    if (bound > best_obj_ && !same_objective(bound, best_obj_)) return;

    const auto c = static_cast<std::size_t>(branch);
    {
      Words next = uncovered;
      for (std::size_t w = 0; w < stride_; ++w) next[w] &= ~cols_[c].rows[w];
      chosen_.push_back(cols_[c].index);
      excluded_[c] = 1;  // never re-pick inside this subtree
      search(cost + cols_[c].weight, next);
      chosen_.pop_back();
    }
    search(cost, uncovered);
    excluded_[c] = 0;
  }

  std::vector<Col> cols_;
  std::size_t stride_;
  double best_obj_;
  std::vector<int> best_sel_;
  std::vector<char> excluded_;
  std::vector<int> chosen_;
  std::vector<double> row_price_;
  std::size_t nodes_ = 0;
};

}  // namespace

void IpInstance::validate() const {
  const std::size_t p = costs.size();
  if (u.cols() != p || v.cols() != p) throw std::invalid_argument("U/V column count must equal the number of costs");
  double total = 0.0;
  for (double c : costs) {
    if (!(c > 0.0)) throw std::invalid_argument("predicate costs must be strictly positive");
    total += c;
  }
  if (!(penalty > total)) throw std::invalid_argument("penalty L must exceed the sum of all costs");
}

IpInstance IpInstance::make(BitMatrix u, BitMatrix v, std::vector<double> costs, std::optional<double> penalty) {
  IpInstance inst{std::move(u), std::move(v), std::move(costs), 0.0};
  double total = 0.0;
  for (double c : inst.costs) total += c;
  inst.penalty = penalty.value_or(1.0 + total);
  inst.validate();
  return inst;
}

IpInstance IpInstance::from(const CoverageMatrices& m, const PredicateSet& predicates, std::optional<double> penalty) {
  std::vector<double> costs;
  costs.reserve(m.predicate_of_column.size());
  for (int id : m.predicate_of_column) costs.push_back(predicates.at(static_cast<std::size_t>(id)).cost);
  return make(m.u, m.v, std::move(costs), penalty);
}

double objective_of(const IpInstance& inst, std::span<const int> selected) {
  double cost = 0.0;
  double overlaps = 0.0;
  for (int j : selected) {
    cost += inst.costs.at(static_cast<std::size_t>(j));
    for (std::size_t k = 0; k < inst.v.rows(); ++k)
      if (inst.v.get(k, static_cast<std::size_t>(j))) overlaps += 1.0;
  }
  return cost + inst.penalty * overlaps;
}

bool covers_all_rows(const IpInstance& inst, std::span<const int> selected) {
  for (std::size_t i = 0; i < inst.u.rows(); ++i) {
    const bool hit = std::any_of(selected.begin(), selected.end(),
                                 [&](int j) { return inst.u.get(i, static_cast<std::size_t>(j)); });
    if (!hit) return false;
  }
  return true;
}

Case classify(const IpInstance& inst, double objective) {
  if (!std::isfinite(objective)) return Case::two;
  return objective >= inst.penalty ? Case::three : Case::one;
}

SetCoverSolution greedy_cover(const IpInstance& inst, const SolveOptions& options) {
  inst.validate();
  const Columns cols(inst, options);
  if (!cols.feasible()) return infeasible();

  Words uncovered = cols.all_rows();
  Words v_hit(words_for(inst.v.rows()), 0);
  std::vector<int> selected;
  std::vector<char> taken(inst.num_predicates(), 0);
  while (std::any_of(uncovered.begin(), uncovered.end(), [](std::uint64_t w) { return w != 0; })) {
    int pick = -1;
    double best = kInf;
    for (std::size_t j = 0; j < inst.num_predicates(); ++j) {
      if (!cols.allowed[j] || taken[j]) continue;
      const std::size_t gain = and_count(cols.u_mask[j], uncovered);
      if (gain == 0) continue;
      std::size_t new_v = 0;
      for (std::size_t w = 0; w < v_hit.size(); ++w)
        new_v += static_cast<std::size_t>(std::popcount(cols.v_mask[j][w] & ~v_hit[w]));
      const double score = (inst.costs[j] + inst.penalty * static_cast<double>(new_v)) / static_cast<double>(gain);
      if (score < best) {
        best = score;
        pick = static_cast<int>(j);
      }
    }
    const auto j = static_cast<std::size_t>(pick);
    taken[j] = 1;
    selected.push_back(pick);
    for (std::size_t w = 0; w < uncovered.size(); ++w) uncovered[w] &= ~cols.u_mask[j][w];
    for (std::size_t w = 0; w < v_hit.size(); ++w) v_hit[w] |= cols.v_mask[j][w];
  }
  return finish(inst, std::move(selected));
}

SetCoverSolution brute_force_cover(const IpInstance& inst, const SolveOptions& options) {
  inst.validate();
  const std::size_t p = inst.num_predicates();
  if (p > kBruteForceLimit)
    throw SizeLimit("brute force is limited to " + std::to_string(kBruteForceLimit) + " predicates");
  const Columns cols(inst, options);
  const Words all = cols.all_rows();
  std::vector<double> weight(p);
  for (std::size_t j = 0; j < p; ++j) weight[j] = inst.costs[j] + inst.penalty * static_cast<double>(cols.v_count[j]);

  double best_obj = kInf;
  std::vector<int> best_sel;
  std::vector<int> sel;
  Words acc(cols.stride);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
    std::fill(acc.begin(), acc.end(), 0);
    sel.clear();
    double obj = 0.0;
    bool ok = true;
    for (std::size_t j = 0; j < p && ok; ++j) {
      if (!((mask >> j) & 1U)) continue;
      if (!cols.allowed[j]) ok = false;
      sel.push_back(static_cast<int>(j));
      obj += weight[j];
      for (std::size_t w = 0; w < cols.stride; ++w) acc[w] |= cols.u_mask[j][w];
    }
    if (!ok || acc != all) continue;
    if (best_sel.empty() && best_obj == kInf) {
      best_obj = obj;
      best_sel = sel;
    } else if (preferred(obj, sel, best_obj, best_sel)) {
      best_obj = obj;
      best_sel = sel;
    }
  }
  if (best_obj == kInf) return infeasible();
  return finish(inst, std::move(best_sel));
}

SetCoverSolution solve_spear_ip(const IpInstance& inst, const SolveOptions& options) {
  inst.validate();
  const Columns cols(inst, options);
  if (!cols.feasible()) return infeasible();
  if (inst.u.rows() == 0) return finish(inst, {});

  // Reduce: drop columns that cover nothing, keep the best column per distinct row mask,
  // then drop masks contained in a cheaper (or equally cheap, lower-index) column.
  std::map<Words, BranchAndBound::Col> by_mask;
  for (std::size_t j = 0; j < inst.num_predicates(); ++j) {
    if (!cols.allowed[j]) continue;
    if (and_count(cols.u_mask[j], cols.u_mask[j]) == 0) continue;
    const double w = inst.costs[j] + inst.penalty * static_cast<double>(cols.v_count[j]);
    auto [it, inserted] = by_mask.try_emplace(cols.u_mask[j], BranchAndBound::Col{static_cast<int>(j), w, cols.u_mask[j]});
    if (!inserted && w < it->second.weight) it->second = {static_cast<int>(j), w, cols.u_mask[j]};
  }
  std::vector<BranchAndBound::Col> reduced;
  reduced.reserve(by_mask.size());
  for (auto& [mask, col] : by_mask) reduced.push_back(col);
  constexpr std::size_t kDominanceLimit = 4096;
  if (reduced.size() <= kDominanceLimit) {
    std::vector<char> drop(reduced.size(), 0);
    for (std::size_t a = 0; a < reduced.size(); ++a)
      for (std::size_t b = 0; b < reduced.size() && !drop[a]; ++b) {
        if (a == b || drop[b]) continue;
        const auto& A = reduced[a];
        const auto& B = reduced[b];
        const bool cheaper = B.weight < A.weight || (B.weight == A.weight && B.index < A.index);
        if (cheaper && subset_of(A.rows, B.rows)) drop[a] = 1;
      }
    std::vector<BranchAndBound::Col> kept;
    for (std::size_t a = 0; a < reduced.size(); ++a)
      if (!drop[a]) kept.push_back(std::move(reduced[a]));
    reduced = std::move(kept);
  }
  std::sort(reduced.begin(), reduced.end(), [](const auto& a, const auto& b) { return a.index < b.index; });

  const SetCoverSolution incumbent = greedy_cover(inst, options);
  BranchAndBound bb(std::move(reduced), cols.stride, incumbent.objective, incumbent.selected);
  bb.run(cols.all_rows());
  SetCoverSolution out = finish(inst, bb.best_selection());
  out.nodes = bb.nodes();
  return out;
}

void dump_instance(const IpInstance& inst, std::ostream& out) {
  out << "spear-ip 1\n";
  out << "predicates " << inst.num_predicates() << '\n';
  out << "u_rows " << inst.u.rows() << '\n';
  out << "v_rows " << inst.v.rows() << '\n';
  std::ostringstream pen;
  pen.precision(17);
  pen << inst.penalty;
  out << "penalty " << pen.str() << '\n';
  out << "costs";
  for (double c : inst.costs) {
    std::ostringstream s;
    s.precision(17);
    s << c;
    out << ' ' << s.str();
  }
  out << '\n';
  auto rows = [&](const char* name, const BitMatrix& m) {
    out << name << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) out << (m.get(i, j) ? '1' : '0');
      out << '\n';
    }
  };
  rows("u", inst.u);
  rows("v", inst.v);
}

IpInstance read_instance(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next = [&](const char* field) {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, field, "unexpected end of instance");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  auto keyed = [&](const char* key) -> std::size_t {
    next(key);
    std::istringstream s(line);
    std::string k;
    long long v = -1;
    if (!(s >> k >> v) || k != key || v < 0) throw ParseError(line_no, key, "expected '" + std::string(key) + " N'");
    return static_cast<std::size_t>(v);
  };
  next("header");
  if (line != "spear-ip 1") throw ParseError(line_no, "header", "expected 'spear-ip 1'");
  const std::size_t p = keyed("predicates");
  const std::size_t ur = keyed("u_rows");
  const std::size_t vr = keyed("v_rows");
  next("penalty");
  double penalty = 0.0;
  {
    std::istringstream s(line);
    std::string k;
    if (!(s >> k >> penalty) || k != "penalty") throw ParseError(line_no, "penalty", "expected 'penalty L'");
  }
  next("costs");
  std::vector<double> costs;
  {
    std::istringstream s(line);
    std::string k;
    s >> k;
    if (k != "costs") throw ParseError(line_no, "costs", "expected 'costs ...'");
    double c;
    while (s >> c) costs.push_back(c);
    if (costs.size() != p) throw ParseError(line_no, "costs", "expected " + std::to_string(p) + " costs");
  }
  auto matrix = [&](const char* name, std::size_t rows) {
    next(name);
    if (line != name) throw ParseError(line_no, name, std::string("expected section '") + name + "'");
    BitMatrix m(rows, p);
    for (std::size_t i = 0; i < rows; ++i) {
      next(name);
      if (line.size() != p) throw ParseError(line_no, name, "row width differs from predicate count");
      for (std::size_t j = 0; j < p; ++j) {
        if (line[j] != '0' && line[j] != '1') throw ParseError(line_no, name, "entries must be 0 or 1");
        m.set(i, j, line[j] == '1');
      }
    }
    return m;
  };
  BitMatrix u = matrix("u", ur);
  BitMatrix v = matrix("v", vr);
  try {
    return IpInstance::make(std::move(u), std::move(v), std::move(costs), penalty);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line_no, "instance", e.what());
  }
}

}  // namespace spear::cover
