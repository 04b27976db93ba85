#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssbfs/error.hpp"

namespace ssbfs {

using ProcessId = std::int32_t;
using Distance = std::uint32_t;
using Edge = std::pair<ProcessId, ProcessId>;

// Sorted, duplicate-free list of process ids.
using ProcessSet = std::vector<ProcessId>;

inline bool set_contains(const ProcessSet& set, ProcessId v) {
  return std::binary_search(set.begin(), set.end(), v);
}

inline ProcessSet make_process_set(std::vector<ProcessId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// Undirected connected graph with a distinguished root. Neighbor order is the
// order in which edges were supplied; it is the total order used by the
// round-robin parent choice and never changes after construction.
class Topology {
 public:
  Topology(std::size_t process_count, ProcessId root, std::vector<Edge> edges)
      : n_(process_count), root_(root), edges_(std::move(edges)) {
    if (n_ == 0) throw InputError("topology needs at least one process");
    if (n_ > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max()))
      throw InputError("topology too large");
    if (!contains(root_)) throw InputError("root " + std::to_string(root_) + " out of range");

    neighbors_.assign(n_, {});
    rank_.assign(n_ * n_, -1);
    for (const auto& [u, v] : edges_) {
      if (!contains(u) || !contains(v))
        throw InputError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                         ") references an unknown process");
      if (u == v) throw InputError("self-loop on process " + std::to_string(u));
      if (rank_[index(u, v)] >= 0)
        throw InputError("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
      rank_[index(u, v)] = static_cast<std::int16_t>(neighbors_[u].size());
      neighbors_[u].push_back(v);
      rank_[index(v, u)] = static_cast<std::int16_t>(neighbors_[v].size());
      neighbors_[v].push_back(u);
    }

    dist_.assign(n_ * n_, kUnreachable);
    for (std::size_t s = 0; s < n_; ++s) bfs_from(static_cast<ProcessId>(s));
    for (std::size_t v = 0; v < n_; ++v) {
      if (dist_[index(root_, static_cast<ProcessId>(v))] == kUnreachable)
        throw InputError("topology is not connected (process " + std::to_string(v) +
                         " unreachable from root)");
      max_degree_ = std::max(max_degree_, neighbors_[v].size());
    }
    for (Distance d : dist_) diameter_ = std::max(diameter_, d);
  }

  std::size_t size() const { return n_; }
  ProcessId root() const { return root_; }
  bool contains(ProcessId v) const { return v >= 0 && static_cast<std::size_t>(v) < n_; }

  std::span<const ProcessId> neighbors(ProcessId v) const {
    check(v);
    return neighbors_[v];
  }
  std::size_t degree(ProcessId v) const { return neighbors(v).size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t max_degree() const { return max_degree_; }
  Distance diameter() const { return diameter_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Position of u in N_v, or nullopt when u is not a neighbor of v.
  std::optional<std::size_t> neighbor_rank(ProcessId v, ProcessId u) const {
    if (!contains(v) || !contains(u)) return std::nullopt;
    const auto r = rank_[index(v, u)];
    if (r < 0) return std::nullopt;
    return static_cast<std::size_t>(r);
  }
  bool adjacent(ProcessId v, ProcessId u) const { return neighbor_rank(v, u).has_value(); }

  Distance distance(ProcessId u, ProcessId v) const {
    check(u);
    check(v);
    return dist_[index(u, v)];
  }

 private:
  static constexpr Distance kUnreachable = std::numeric_limits<Distance>::max();

  std::size_t index(ProcessId a, ProcessId b) const {
    return static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b);
  }
  void check(ProcessId v) const {
    if (!contains(v)) throw InputError("unknown process id " + std::to_string(v));
  }

  void bfs_from(ProcessId s) {
    std::queue<ProcessId> frontier;
    dist_[index(s, s)] = 0;
    frontier.push(s);
    while (!frontier.empty()) {
      const ProcessId x = frontier.front();
      frontier.pop();
      for (ProcessId y : neighbors_[x]) {
        if (dist_[index(s, y)] != kUnreachable) continue;
        dist_[index(s, y)] = dist_[index(s, x)] + 1;
        frontier.push(y);
      }
    }
  }

  std::size_t n_;
  ProcessId root_;
  std::vector<Edge> edges_;
  std::vector<std::vector<ProcessId>> neighbors_;
  std::vector<std::int16_t> rank_;
  std::vector<Distance> dist_;
  std::size_t max_degree_ = 0;
  Distance diameter_ = 0;
};

inline Distance hop_distance(const Topology& topo, ProcessId u, ProcessId v) {
  return topo.distance(u, v);
}

inline Distance diameter(const Topology& topo) { return topo.diameter(); }

// The Byzantine set B. Validity against a topology is checked by validate().
struct FaultModel {
  ProcessSet byzantine;

  FaultModel() = default;
  explicit FaultModel(std::vector<ProcessId> ids) : byzantine(make_process_set(std::move(ids))) {}

  std::size_t f() const { return byzantine.size(); }
  bool is_byzantine(ProcessId v) const { return set_contains(byzantine, v); }

  void validate(const Topology& topo) const {
    for (ProcessId b : byzantine) {
      if (!topo.contains(b)) throw InputError("Byzantine id " + std::to_string(b) + " out of range");
      if (b == topo.root()) throw PreconditionError("the root cannot be Byzantine");
    }
  }

  friend bool operator==(const FaultModel&, const FaultModel&) = default;
};

struct ContainmentAreas {
  ProcessSet s_b;
  ProcessSet s_b_star;
  ProcessSet e_b;
};

inline Distance distance_to_byzantine(const Topology& topo, const FaultModel& fm, ProcessId v) {
  Distance best = std::numeric_limits<Distance>::max();
  for (ProcessId b : fm.byzantine) best = std::min(best, topo.distance(v, b));
  return best;
}

// S_B: correct non-root processes at least as close to some Byzantine process
// as to the root. S_B*: strictly closer. E_B: the tie frontier.
inline ContainmentAreas compute_containment_areas(const Topology& topo, const FaultModel& fm) {
  fm.validate(topo);
  ContainmentAreas areas;
  if (fm.byzantine.empty()) return areas;
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    if (v == topo.root() || fm.is_byzantine(v)) continue;
    const Distance to_b = distance_to_byzantine(topo, fm, v);
    const Distance to_r = topo.distance(topo.root(), v);
    if (to_b <= to_r) areas.s_b.push_back(v);
    if (to_b < to_r) areas.s_b_star.push_back(v);
    if (to_b == to_r) areas.e_b.push_back(v);
  }
  return areas;
}

// Correct processes within `radius` hops of a Byzantine process. Instantiating
// the area checks with this set yields the radius-based containment notions.
inline ProcessSet radius_area(const Topology& topo, const FaultModel& fm, Distance radius) {
  fm.validate(topo);
  ProcessSet area;
  if (fm.byzantine.empty()) return area;
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    if (fm.is_byzantine(v)) continue;
    if (distance_to_byzantine(topo, fm, v) <= radius) area.push_back(v);
  }
  return area;
}

// --- topology file ---------------------------------------------------------
//
//   n root
//   u v          (one edge per line, 0-indexed; order defines neighbor order)
//   byz b1 b2 …  (optional)
//
// Blank lines and lines starting with '#' are ignored.

struct TopologyFile {
  Topology topology;
  std::optional<FaultModel> faults;
};

inline TopologyFile parse_topology(std::istream& in) {
  std::string line;
  std::optional<std::pair<long long, long long>> header;
  std::vector<Edge> edges;
  std::optional<FaultModel> faults;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    auto fail = [&](const std::string& why) {
      return InputError("topology line " + std::to_string(line_no) + ": " + why);
    };
    if (line.compare(first, 3, "byz") == 0) {
      std::string tag;
      fields >> tag;
      std::vector<ProcessId> ids;
      long long id = 0;
      while (fields >> id) ids.push_back(static_cast<ProcessId>(id));
      if (!fields.eof()) throw fail("bad Byzantine id list");
      faults = FaultModel(std::move(ids));
      continue;
    }
    long long a = 0;
    long long b = 0;
    std::string rest;
    if (!(fields >> a >> b) || (fields >> rest)) throw fail("expected two integers");
    if (!header) {
      if (a <= 0) throw fail("process count must be positive");
      header = {a, b};
    } else {
      if (a < 0 || b < 0) throw fail("negative process id");
      edges.emplace_back(static_cast<ProcessId>(a), static_cast<ProcessId>(b));
    }
  }
  if (!header) throw InputError("topology file is empty");
  TopologyFile file{Topology(static_cast<std::size_t>(header->first),
                             static_cast<ProcessId>(header->second), std::move(edges)),
                    std::move(faults)};
  if (file.faults) file.faults->validate(file.topology);
  return file;
}

inline void write_topology(std::ostream& out, const Topology& topo,
                           const FaultModel* faults = nullptr) {
  out << topo.size() << ' ' << topo.root() << '\n';
  for (const auto& [u, v] : topo.edges()) out << u << ' ' << v << '\n';
  if (faults != nullptr && !faults->byzantine.empty()) {
    out << "byz";
    for (ProcessId b : faults->byzantine) out << ' ' << b;
    out << '\n';
  }
}

// FNV-1a over the canonical topology text; identifies a topology in traces.
inline std::uint64_t topology_hash(const Topology& topo) {
  std::ostringstream text;
  write_topology(text, topo);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ssbfs
