#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "spear/evac.hpp"
#include "spear/mdp.hpp"

namespace testing_support {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(SPEAR_SOURCE_DIR) / rel;
}

inline spear::evac::EvacMap map_from(const std::string& text) {
  std::istringstream in(text);
  return spear::evac::load_map(in);
}

// Corridor 0 - 1 - ... - (n-1) with the last state an exit. Action 0 moves left,
// action 1 right; the right move succeeds with `p`, otherwise the agent stays.
inline spear::Mdp corridor(int n, double p = 1.0) {
  spear::Mdp::Builder b(static_cast<std::size_t>(n), 2);
  for (int s = 0; s + 1 < n; ++s) {
    b.set(s, 0, {{s > 0 ? s - 1 : 0, 1.0}});
    if (p >= 1.0) b.set(s, 1, {{s + 1, 1.0}});
    else b.set(s, 1, {{s + 1, p}, {s, 1.0 - p}});
  }
  return std::move(b).build();
}

inline spear::RewardFunction corridor_reward(int n) {
  spear::RewardFunction r(static_cast<std::size_t>(n), -1.0);
  r.set_entry(n - 1, 99.0);
  return r;
}

inline spear::PlannerOptions episodic() { return {1.0, 1e-9, 0}; }

}  // namespace testing_support
