#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ssbfs/error.hpp"
#include "ssbfs/execution.hpp"
#include "ssbfs/graph.hpp"
#include "ssbfs/protocol.hpp"
#include "ssbfs/scheduler.hpp"

namespace ssbfs {

enum class Stability { stable, unstable, indeterminate };

// How a BFS path may start at a Byzantine process. `literal` requires
// (⊥,0) there; `level_only` accepts any prnt as long as the level is 0.
// The protocol never reads prnt_b, so the two can disagree forever.
enum class Endpoint { literal, level_only };

// Membership bitmap over process ids.
using AreaMask = std::vector<char>;

inline AreaMask make_area_mask(std::size_t n, const ProcessSet& area) {
  AreaMask mask(n, 0);
  for (ProcessId v : area)
    if (v >= 0 && static_cast<std::size_t>(v) < n) mask[static_cast<std::size_t>(v)] = 1;
  return mask;
}

struct ConfigurationHasher {
  std::size_t operator()(const Configuration& c) const { return static_cast<std::size_t>(c.hash()); }
};

// Precomputes areas and anchor distances for one (topology, fault model) pair.
// Holds references: the topology and fault model must outlive the analyzer.
class Analyzer {
 public:
  Analyzer(const Topology& topo, const FaultModel& fm)
      : topo_(&topo), fm_(&fm), areas_(compute_containment_areas(topo, fm)) {
    const std::size_t n = topo.size();
    s_b_ = make_area_mask(n, areas_.s_b);
    s_b_star_ = make_area_mask(n, areas_.s_b_star);
    byz_.assign(n, 0);
    for (ProcessId b : fm.byzantine) byz_[static_cast<std::size_t>(b)] = 1;
    anchor_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<ProcessId>(i);
      anchor_[i] = std::min(topo.distance(v, topo.root()), distance_to_byzantine(topo, fm, v));
    }
  }

  const Topology& topology() const { return *topo_; }
  const FaultModel& faults() const { return *fm_; }
  const ContainmentAreas& areas() const { return areas_; }
  const AreaMask& s_b_mask() const { return s_b_; }
  const AreaMask& s_b_star_mask() const { return s_b_star_; }
  bool is_byzantine(ProcessId v) const { return byz_[static_cast<std::size_t>(v)] != 0; }

  // min over u ∈ B ∪ {r} of d(v, u).
  Distance anchor_distance(ProcessId v) const { return anchor_[static_cast<std::size_t>(v)]; }

  // spec(v). For non-root v the only BFS-path candidate is the prnt chain
  // ending at v (condition 2 forces it), so the chain is followed and every
  // condition checked literally against cfg.
  bool spec_holds(const Configuration& cfg, ProcessId v, Endpoint rule = Endpoint::literal) const {
    const Topology& topo = *topo_;
    if (v == topo.root()) return cfg[v].prnt == kNoParent && cfg[v].level == 0;
    ProcessId cur = v;
    for (std::size_t hops = 0; hops <= topo.size(); ++hops) {
      const ProcessState& s = cfg[cur];
      if (rule == Endpoint::level_only && cur != v && is_byzantine(cur) && s.level == 0) return true;
      if (s.prnt == kNoParent)
        return cur != v && s.level == 0 && (cur == topo.root() || is_byzantine(cur));
      if (!topo.adjacent(cur, s.prnt)) return false;
      const Level parent_level = cfg[s.prnt].level;
      if (s.level != parent_level + 1) return false;
      if (parent_level != detail::min_neighbor_level(topo, cfg, cur)) return false;
      cur = s.prnt;
    }
    return false;
  }

  // Largest d ≤ D such that I_d holds. I_d is monotone in d.
  Distance max_invariant_depth(const Configuration& cfg) const {
    Distance best = topo_->diameter();
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      const Level level = cfg[static_cast<ProcessId>(i)].level;
      if (level < anchor_[i]) best = std::min<Distance>(best, static_cast<Distance>(level));
    }
    return best;
  }

  bool predicate_i(const Configuration& cfg, Distance d) const {
    if (d > topo_->diameter())
      throw PreconditionError("I_d requires 0 <= d <= D (d=" + std::to_string(d) + ")");
    for (std::size_t i = 0; i < cfg.size(); ++i)
      if (cfg[static_cast<ProcessId>(i)].level < std::min<Level>(d, anchor_[i])) return false;
    return true;
  }

  // Every correct process outside `area` satisfies spec.
  bool is_area_legitimate(const Configuration& cfg, const AreaMask& area,
                          Endpoint rule = Endpoint::literal) const {
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      if (byz_[i] || area[i]) continue;
      if (!spec_holds(cfg, static_cast<ProcessId>(i), rule)) return false;
    }
    return true;
  }

  // No area-correct process is enabled, and freezing Byzantine states and
  // running the protocol synchronously to quiescence never changes an
  // area-correct process. budget = 0 means 50·n·m.
  Stability is_area_stable(const Configuration& cfg, const AreaMask& area, std::size_t budget = 0) const {
    const Topology& topo = *topo_;
    if (budget == 0) budget = default_step_budget(topo);
    auto area_correct = [&](std::size_t i) { return !byz_[i] && !area[i]; };
    for (std::size_t i = 0; i < cfg.size(); ++i)
      if (area_correct(i) && detail::guard_holds(topo, cfg, static_cast<ProcessId>(i)))
        return Stability::unstable;
    Configuration cur = cfg;
    std::vector<ProcessId> active;
    for (std::size_t k = 0; k < budget; ++k) {
      active.clear();
      for (std::size_t i = 0; i < cur.size(); ++i)
        if (!byz_[i] && detail::guard_holds(topo, cur, static_cast<ProcessId>(i)))
          active.push_back(static_cast<ProcessId>(i));
      if (active.empty()) return Stability::stable;
      Configuration next = cur;
      for (ProcessId v : active) next[v] = detail::rule_result(topo, cur, v);
      for (ProcessId v : active)
        if (area_correct(static_cast<std::size_t>(v)) && next[v] != cur[v]) return Stability::unstable;
      cur = std::move(next);
    }
    return Stability::indeterminate;
  }

  bool in_lc(const Configuration& cfg, Endpoint rule = Endpoint::literal) const {
    return is_area_legitimate(cfg, s_b_, rule) && predicate_i(cfg, topo_->diameter());
  }
  bool in_lc_star(const Configuration& cfg, Endpoint rule = Endpoint::literal) const {
    return is_area_legitimate(cfg, s_b_star_, rule) && predicate_i(cfg, topo_->diameter());
  }

 private:
  const Topology* topo_;
  const FaultModel* fm_;
  ContainmentAreas areas_;
  AreaMask s_b_;
  AreaMask s_b_star_;
  AreaMask byz_;
  std::vector<Distance> anchor_;
};

// --- free-function forms ------------------------------------------------------

inline bool spec_holds(const Topology& topo, const FaultModel& fm, const Configuration& cfg, ProcessId v) {
  return Analyzer(topo, fm).spec_holds(cfg, v);
}
inline bool predicate_I(const Topology& topo, const FaultModel& fm, const Configuration& cfg, Distance d) {
  return Analyzer(topo, fm).predicate_i(cfg, d);
}
inline bool is_area_legitimate(const Topology& topo, const FaultModel& fm, const Configuration& cfg,
                               const ProcessSet& area) {
  return Analyzer(topo, fm).is_area_legitimate(cfg, make_area_mask(topo.size(), area));
}
inline Stability is_area_stable(const Topology& topo, const FaultModel& fm, const Configuration& cfg,
                                const ProcessSet& area, std::size_t budget = 0) {
  return Analyzer(topo, fm).is_area_stable(cfg, make_area_mask(topo.size(), area), budget);
}
inline bool in_LC(const Topology& topo, const FaultModel& fm, const Configuration& cfg) {
  return Analyzer(topo, fm).in_lc(cfg);
}
inline bool in_LC_star(const Topology& topo, const FaultModel& fm, const Configuration& cfg) {
  return Analyzer(topo, fm).in_lc_star(cfg);
}

// --- trace analysis -------------------------------------------------------------

// Configuration indices [start_index, end_index]; both endpoints are
// area-legitimate and area-stable, and some area-correct process changed an
// O-variable in between. An unterminated trailing segment has closed = false.
struct DisruptionSegment {
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  ProcessSet changed_processes;
  bool closed = true;
};

// Caches area-legitimate ∧ area-stable per configuration; oscillating
// adversaries revisit the same configurations many times.
class BoundaryOracle {
 public:
  BoundaryOracle(const Analyzer& analyzer, AreaMask area) : analyzer_(&analyzer), area_(std::move(area)) {}

  bool good(const Configuration& cfg, std::size_t index) {
    if (!analyzer_->is_area_legitimate(cfg, area_)) return false;
    if (auto it = cache_.find(cfg); it != cache_.end()) return resolve(it->second, index);
    const Stability s = analyzer_->is_area_stable(cfg, area_);
    cache_.emplace(cfg, s);
    return resolve(s, index);
  }

  const AreaMask& area() const { return area_; }

 private:
  static bool resolve(Stability s, std::size_t index) {
    if (s == Stability::indeterminate) throw AnalysisError("area stability undecided within budget", index);
    return s == Stability::stable;
  }

  const Analyzer* analyzer_;
  AreaMask area_;
  std::unordered_map<Configuration, Stability, ConfigurationHasher> cache_;
};

inline std::vector<DisruptionSegment> segment_disruptions(const Analyzer& analyzer, const Execution& exec,
                                                          const ProcessSet& area) {
  BoundaryOracle oracle(analyzer, make_area_mask(analyzer.topology().size(), area));
  std::vector<DisruptionSegment> out;
  std::optional<std::size_t> anchor;
  ProcessSet pending;
  const std::size_t n = analyzer.topology().size();
  for (std::size_t i = 0; i < exec.configuration_count(); ++i) {
    if (i > 0 && anchor) {
      const Configuration& before = exec.configuration(i - 1);
      const Configuration& after = exec.configuration(i);
      for (std::size_t p = 0; p < n; ++p) {
        const auto v = static_cast<ProcessId>(p);
        if (analyzer.is_byzantine(v) || oracle.area()[p]) continue;
        if (before[v] != after[v]) pending.push_back(v);
      }
    }
    if (oracle.good(exec.configuration(i), i)) {
      if (anchor && !pending.empty()) out.push_back({*anchor, i, make_process_set(std::move(pending)), true});
      pending.clear();
      anchor = i;
    }
  }
  if (anchor && !pending.empty())
    out.push_back({*anchor, exec.configuration_count() - 1, make_process_set(std::move(pending)), false});
  return out;
}

inline std::vector<DisruptionSegment> segment_disruptions(const Execution& exec, const ProcessSet& area) {
  Analyzer analyzer(*exec.topology, exec.faults);
  return segment_disruptions(analyzer, exec, area);
}

// Per-process number of steps k ≥ from_index whose activation set contains it.
inline std::vector<std::size_t> activation_counts(const Execution& exec, std::size_t from_index) {
  std::vector<std::size_t> counts(exec.topology->size(), 0);
  for (std::size_t k = from_index; k < exec.steps.size(); ++k)
    for (ProcessId v : exec.steps[k].activated) ++counts[static_cast<std::size_t>(v)];
  return counts;
}

// Per-process number of steps k ≥ from_index in which a correct process's
// (prnt, level) changed. Byzantine processes are reported as 0.
inline std::vector<std::size_t> change_counts(const Execution& exec, std::size_t from_index) {
  const std::size_t n = exec.topology->size();
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t k = from_index; k < exec.steps.size(); ++k) {
    const Configuration& before = exec.configuration(k);
    const Configuration& after = exec.steps[k].result;
    for (std::size_t p = 0; p < n; ++p) {
      const auto v = static_cast<ProcessId>(p);
      if (!exec.faults.is_byzantine(v) && before[v] != after[v]) ++counts[p];
    }
  }
  return counts;
}

inline std::optional<std::size_t> first_index(const Execution& exec,
                                              const std::function<bool(const Configuration&)>& pred) {
  for (std::size_t i = 0; i < exec.configuration_count(); ++i)
    if (pred(exec.configuration(i))) return i;
  return std::nullopt;
}

struct StabilizationMetrics {
  std::optional<std::size_t> first_lc_index;
  std::optional<std::size_t> first_lc_star_index;
  // Closed S_B*-TA-disruptions starting at or after first_lc_star_index
  // (over the whole trace when LC* is never reached).
  std::size_t disruption_count = 0;
  bool open_disruption = false;
  // O-variable changes from first_lc_star_index on (from 0 without LC*).
  std::vector<std::size_t> per_process_changes;
  std::optional<std::size_t> steps_to_contain;

  std::size_t max_changes() const {
    return per_process_changes.empty() ? 0
                                       : *std::max_element(per_process_changes.begin(), per_process_changes.end());
  }
};

inline StabilizationMetrics measure(const Analyzer& analyzer, const Execution& exec) {
  StabilizationMetrics m;
  m.first_lc_index = first_index(exec, [&](const Configuration& c) { return analyzer.in_lc(c); });
  if (m.first_lc_index)
    for (std::size_t i = *m.first_lc_index; i < exec.configuration_count(); ++i)
      if (analyzer.in_lc_star(exec.configuration(i))) {
        m.first_lc_star_index = i;
        break;
      }
  const std::size_t from = m.first_lc_star_index.value_or(0);
  for (const auto& seg : segment_disruptions(analyzer, exec, analyzer.areas().s_b_star)) {
    if (seg.start_index < from) continue;
    if (seg.closed)
      ++m.disruption_count;
    else
      m.open_disruption = true;
  }
  m.per_process_changes = change_counts(exec, from);
  m.steps_to_contain = m.first_lc_star_index;
  return m;
}

inline StabilizationMetrics measure(const Execution& exec) {
  Analyzer analyzer(*exec.topology, exec.faults);
  return measure(analyzer, exec);
}

// Checks the containment guarantees of the protocol on one trace.
struct TheoremAudit {
  struct Change {
    std::size_t step = 0;
    ProcessId process = 0;
  };
  struct Activation {
    ProcessId process = 0;
    std::size_t count = 0;
    std::size_t bound = 0;  // Δ_v
    // v has a neighbor outside S_B one hop closer to the root.
    bool has_anchor_neighbor = false;
  };

  StabilizationMetrics metrics;
  // I_d closure: first configuration whose max valid depth dropped.
  std::optional<std::size_t> closure_violation;
  // O-variable changes by (V∖S_B)-correct processes after first LC.
  std::vector<Change> containment_violations;
  // E_B activation counts after first LC.
  std::vector<Activation> activations;
  std::size_t disruption_bound = 0;  // 2m
  std::size_t change_bound = 0;      // Δ
  // S_B*-correct processes whose change count after first LC* exceeds Δ.
  std::vector<ProcessId> change_violations;

  bool converged() const { return metrics.first_lc_index && metrics.first_lc_star_index; }
  bool closure_ok() const { return !closure_violation; }
  bool containment_ok() const { return metrics.first_lc_index && containment_violations.empty(); }
  bool activations_ok() const {
    return metrics.first_lc_index && std::all_of(activations.begin(), activations.end(),
                                                 [](const Activation& a) { return a.count <= a.bound; });
  }
  bool anchored_activations_ok() const {
    return metrics.first_lc_index &&
           std::all_of(activations.begin(), activations.end(),
                       [](const Activation& a) { return !a.has_anchor_neighbor || a.count <= a.bound; });
  }
  bool disruptions_ok() const {
    return metrics.first_lc_star_index &&
           metrics.disruption_count + (metrics.open_disruption ? 1 : 0) <= disruption_bound;
  }
  bool changes_ok() const { return metrics.first_lc_star_index && change_violations.empty(); }
  bool bounds_ok() const { return disruptions_ok() && changes_ok(); }
};

inline TheoremAudit audit(const Analyzer& analyzer, const Execution& exec) {
  const Topology& topo = analyzer.topology();
  TheoremAudit a;
  a.metrics = measure(analyzer, exec);
  a.disruption_bound = 2 * topo.edge_count();
  a.change_bound = topo.max_degree();

  Distance depth = analyzer.max_invariant_depth(exec.configuration(0));
  for (std::size_t i = 1; i < exec.configuration_count(); ++i) {
    const Distance now = analyzer.max_invariant_depth(exec.configuration(i));
    if (now < depth && !a.closure_violation) a.closure_violation = i;
    depth = std::max(depth, now);
  }

  const AreaMask& s_b = analyzer.s_b_mask();
  if (a.metrics.first_lc_index) {
    const std::size_t from = *a.metrics.first_lc_index;
    for (std::size_t k = from; k < exec.steps.size(); ++k) {
      const Configuration& before = exec.configuration(k);
      const Configuration& after = exec.steps[k].result;
      for (std::size_t p = 0; p < topo.size(); ++p) {
        const auto v = static_cast<ProcessId>(p);
        if (analyzer.is_byzantine(v) || s_b[p]) continue;
        if (before[v] != after[v]) a.containment_violations.push_back({k, v});
      }
    }
    const auto counts = activation_counts(exec, from);
    for (ProcessId v : analyzer.areas().e_b) {
      bool anchored = false;
      for (ProcessId u : topo.neighbors(v))
        if (!s_b[static_cast<std::size_t>(u)] && !analyzer.is_byzantine(u) &&
            topo.distance(topo.root(), u) + 1 == topo.distance(topo.root(), v))
          anchored = true;
      a.activations.push_back({v, counts[static_cast<std::size_t>(v)], topo.degree(v), anchored});
    }
  }
  if (a.metrics.first_lc_star_index) {
    const AreaMask& s_b_star = analyzer.s_b_star_mask();
    for (std::size_t p = 0; p < topo.size(); ++p) {
      if (analyzer.is_byzantine(static_cast<ProcessId>(p)) || s_b_star[p]) continue;
      if (a.metrics.per_process_changes[p] > a.change_bound) a.change_violations.push_back(static_cast<ProcessId>(p));
    }
  }
  return a;
}

inline TheoremAudit audit(const Execution& exec) {
  Analyzer analyzer(*exec.topology, exec.faults);
  return audit(analyzer, exec);
}

}  // namespace ssbfs
