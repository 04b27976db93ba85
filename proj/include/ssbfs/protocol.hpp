#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssbfs/error.hpp"
#include "ssbfs/graph.hpp"

namespace ssbfs {

using Level = std::uint64_t;

// Encodes ⊥ for prnt.
inline constexpr ProcessId kNoParent = -1;
// Upper bound on any stored level; keeps level + 1 representable.
inline constexpr Level kMaxLevel = Level{1} << 62;

struct ProcessState {
  ProcessId prnt = kNoParent;
  Level level = 0;

  friend auto operator<=>(const ProcessState&, const ProcessState&) = default;
};

inline std::ostream& operator<<(std::ostream& out, const ProcessState& s) {
  out << '(';
  if (s.prnt == kNoParent)
    out << "⊥";
  else
    out << s.prnt;
  return out << ',' << s.level << ')';
}

class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::size_t n, ProcessState fill = {}) : states_(n, fill) {}
  explicit Configuration(std::vector<ProcessState> states) : states_(std::move(states)) {}

  std::size_t size() const { return states_.size(); }
  const ProcessState& operator[](ProcessId v) const { return states_[static_cast<std::size_t>(v)]; }
  ProcessState& operator[](ProcessId v) { return states_[static_cast<std::size_t>(v)]; }
  const std::vector<ProcessState>& states() const { return states_; }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t x) {
      for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& s : states_) {
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(s.prnt)));
      mix(s.level);
    }
    return h;
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::vector<ProcessState> states_;
};

struct ByzWrite {
  ProcessId id = 0;
  ProcessState state;
  friend bool operator==(const ByzWrite&, const ByzWrite&) = default;
};
using ByzWrites = std::vector<ByzWrite>;

namespace detail {

// Minimum level over N_v.
inline Level min_neighbor_level(const Topology& topo, const Configuration& cfg, ProcessId v) {
  Level best = std::numeric_limits<Level>::max();
  for (ProcessId q : topo.neighbors(v)) best = std::min(best, cfg[q].level);
  return best;
}

inline bool guard_holds(const Topology& topo, const Configuration& cfg, ProcessId v) {
  const ProcessState& s = cfg[v];
  if (v == topo.root()) return s.prnt != kNoParent || s.level != 0;
  if (s.prnt == kNoParent || !topo.adjacent(v, s.prnt)) return true;
  const Level parent_level = cfg[s.prnt].level;
  return s.level != parent_level + 1 || parent_level != min_neighbor_level(topo, cfg, v);
}

}  // namespace detail

// Guard of R_r (v = root) or R_v (otherwise). A prnt that is not a neighbor
// counts as ⊥.
inline bool is_enabled(const Topology& topo, const Configuration& cfg, ProcessId v) {
  if (!topo.contains(v)) throw InputError("unknown process id " + std::to_string(v));
  return detail::guard_holds(topo, cfg, v);
}

// Round-robin choice: the first candidate strictly after current_prnt in N_v
// order, wrapping to the first candidate. ⊥ (or a non-neighbor) sorts below
// every neighbor.
inline ProcessId choose(const Topology& topo, ProcessId v, ProcessId current_prnt,
                        std::span<const ProcessId> candidates) {
  if (candidates.empty()) throw std::logic_error("choose: empty candidate set");
  const auto current = topo.neighbor_rank(v, current_prnt);
  ProcessId after = kNoParent;
  std::size_t after_rank = 0;
  ProcessId first = kNoParent;
  std::size_t first_rank = 0;
  for (ProcessId c : candidates) {
    const auto rank = topo.neighbor_rank(v, c);
    if (!rank) throw ContractViolation("choose: candidate " + std::to_string(c) +
                                       " is not a neighbor of " + std::to_string(v));
    if (first == kNoParent || *rank < first_rank) {
      first = c;
      first_rank = *rank;
    }
    if (current && *rank > *current && (after == kNoParent || *rank < after_rank)) {
      after = c;
      after_rank = *rank;
    }
  }
  return (current && after != kNoParent) ? after : first;
}

namespace detail {

inline ProcessState rule_result(const Topology& topo, const Configuration& cfg, ProcessId v) {
  if (v == topo.root()) return {kNoParent, 0};
  const Level low = min_neighbor_level(topo, cfg, v);
  // Neighbors are scanned in N_v order, so the first candidate after the
  // current parent is found without materializing the candidate set.
  const auto nbrs = topo.neighbors(v);
  const auto current = topo.neighbor_rank(v, cfg[v].prnt);
  ProcessId first = kNoParent;
  ProcessId after = kNoParent;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    if (cfg[nbrs[k]].level != low) continue;
    if (first == kNoParent) first = nbrs[k];
    if (current && k > *current) {
      after = nbrs[k];
      break;
    }
  }
  const ProcessId chosen = (current && after != kNoParent) ? after : first;
  return {chosen, low + 1};
}

}  // namespace detail

// Post-state of v after executing its enabled rule against cfg.
inline ProcessState apply_rule(const Topology& topo, const Configuration& cfg, ProcessId v) {
  if (!is_enabled(topo, cfg, v))
    throw ContractViolation("apply_rule: process " + std::to_string(v) + " is not enabled");
  return detail::rule_result(topo, cfg, v);
}

// One atomic step: every activated process reads cfg and moves; Byzantine
// processes take their written states verbatim; nobody else changes.
inline Configuration step(const Topology& topo, const FaultModel& fm, const Configuration& cfg,
                          std::span<const ProcessId> activated, std::span<const ByzWrite> byz) {
  if (cfg.size() != topo.size()) throw InputError("configuration size does not match topology");
  Configuration next = cfg;
  for (ProcessId v : activated) {
    if (!topo.contains(v)) throw InputError("unknown process id " + std::to_string(v));
    if (fm.is_byzantine(v))
      throw ContractViolation("Byzantine process " + std::to_string(v) +
                              " cannot be activated; use a Byzantine write");
    if (!detail::guard_holds(topo, cfg, v))
      throw ContractViolation("process " + std::to_string(v) + " activated while disabled");
    next[v] = detail::rule_result(topo, cfg, v);
  }
  for (const ByzWrite& w : byz) {
    if (!topo.contains(w.id) || !fm.is_byzantine(w.id))
      throw ContractViolation("Byzantine write targets correct process " + std::to_string(w.id));
    if (w.state.level > kMaxLevel) throw ContractViolation("Byzantine level out of range");
    next[w.id] = w.state;
  }
  return next;
}

// Correct processes whose prnt is not a neighbor get ⊥ (such values are not
// representable in the model). Byzantine states are left untouched.
inline Configuration normalize(const Topology& topo, const FaultModel& fm, Configuration cfg) {
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    if (fm.is_byzantine(v)) continue;
    if (cfg[v].prnt != kNoParent && !topo.adjacent(v, cfg[v].prnt)) cfg[v].prnt = kNoParent;
  }
  return cfg;
}

// --- configuration file: one `id prnt level` record per process, prnt -1 = ⊥.

inline void write_configuration(std::ostream& out, const Configuration& cfg) {
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    out << v << ' ' << cfg[v].prnt << ' ' << cfg[v].level << '\n';
  }
}

inline Configuration parse_configuration(std::istream& in, std::size_t n) {
  std::vector<ProcessState> states(n);
  std::vector<bool> seen(n, false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long id = 0;
    long long prnt = 0;
    long long level = 0;
    std::string rest;
    if (!(fields >> id >> prnt >> level) || (fields >> rest))
      throw InputError("configuration line " + std::to_string(line_no) + ": expected `id prnt level`");
    if (id < 0 || static_cast<std::size_t>(id) >= n)
      throw InputError("configuration line " + std::to_string(line_no) + ": unknown id");
    if (seen[static_cast<std::size_t>(id)])
      throw InputError("configuration line " + std::to_string(line_no) + ": duplicate id");
    if (level < 0 || static_cast<Level>(level) > kMaxLevel)
      throw InputError("configuration line " + std::to_string(line_no) + ": level out of range");
    if (prnt < -1) throw InputError("configuration line " + std::to_string(line_no) + ": bad prnt");
    seen[static_cast<std::size_t>(id)] = true;
    states[static_cast<std::size_t>(id)] = {static_cast<ProcessId>(prnt), static_cast<Level>(level)};
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) throw InputError("configuration misses process " + std::to_string(i));
  return Configuration(std::move(states));
}

}  // namespace ssbfs
