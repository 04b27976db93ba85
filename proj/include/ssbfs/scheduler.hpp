#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssbfs/adversary.hpp"
#include "ssbfs/error.hpp"
#include "ssbfs/execution.hpp"
#include "ssbfs/graph.hpp"
#include "ssbfs/protocol.hpp"

namespace ssbfs {

enum class DaemonKind { central, distributed, synchronous };
enum class Fairness { round_robin, random, scripted };
enum class ByzScheduling { every_step, on_script };

struct DaemonScriptEntry {
  ProcessSet activated;
  // Under ByzScheduling::on_script, Byzantine advice is applied only on
  // entries with this flag set.
  bool byzantine = true;
};

struct DaemonPolicy {
  DaemonKind kind = DaemonKind::distributed;
  Fairness fairness = Fairness::random;
  std::uint64_t seed = 0;
  ByzScheduling byz_scheduling = ByzScheduling::every_step;
  std::vector<DaemonScriptEntry> script;
  // Bounded-fairness window in counted steps; 0 means n.
  std::size_t fairness_window = 0;

  static DaemonPolicy central(Fairness f, std::uint64_t seed = 0) {
    return {DaemonKind::central, f, seed, ByzScheduling::every_step, {}, 0};
  }
  static DaemonPolicy distributed(Fairness f, std::uint64_t seed = 0) {
    return {DaemonKind::distributed, f, seed, ByzScheduling::every_step, {}, 0};
  }
  static DaemonPolicy synchronous() {
    return {DaemonKind::synchronous, Fairness::round_robin, 0, ByzScheduling::every_step, {}, 0};
  }
  static DaemonPolicy scripted(DaemonKind kind, std::vector<DaemonScriptEntry> script,
                               ByzScheduling byz = ByzScheduling::every_step) {
    return {kind, Fairness::scripted, 0, byz, std::move(script), 0};
  }

  std::string label() const {
    std::string out = kind == DaemonKind::central       ? "central"
                      : kind == DaemonKind::distributed ? "distributed"
                                                        : "synchronous";
    if (kind != DaemonKind::synchronous) {
      out += fairness == Fairness::round_robin ? " fair-round-robin"
             : fairness == Fairness::random    ? " fair-random seed=" + std::to_string(seed)
                                               : " adversarial-script steps=" + std::to_string(script.size());
    }
    if (byz_scheduling == ByzScheduling::on_script) out += " byz=on-script";
    return out;
  }
};

struct StopCriterion {
  enum class Kind { max_steps, quiescent, predicate };

  Kind kind = Kind::max_steps;
  std::size_t budget = 0;
  std::function<bool(const Execution&)> predicate;

  static StopCriterion max_steps(std::size_t n) { return {Kind::max_steps, n, {}}; }
  // Stops once no correct process is enabled and the adversary has nothing
  // left to write; `budget` caps the number of steps either way.
  static StopCriterion quiescent_and_adversary_done(std::size_t budget) {
    return {Kind::quiescent, budget, {}};
  }
  static StopCriterion when(std::function<bool(const Execution&)> pred, std::size_t budget) {
    return {Kind::predicate, budget, std::move(pred)};
  }
};

// Step budget used for convergence runs: 50·n·m (at least 50).
inline std::size_t default_step_budget(const Topology& topo) {
  return 50 * topo.size() * std::max<std::size_t>(topo.edge_count(), 1);
}

inline ProcessSet enabled_set(const Topology& topo, const FaultModel& fm, const Configuration& cfg) {
  ProcessSet out;
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    if (!fm.is_byzantine(v) && detail::guard_holds(topo, cfg, v)) out.push_back(v);
  }
  return out;
}

// Advances one execution step by step. Daemon bookkeeping (fairness ages,
// round-robin pointers, RNG) persists across advance() calls so that phased
// constructions share one trace.
class Engine {
 public:
  Engine(std::shared_ptr<const Topology> topo, FaultModel fm, Configuration initial,
         std::uint64_t seed = 0)
      : rng_(seed) {
    if (!topo) throw InputError("engine needs a topology");
    fm.validate(*topo);
    if (initial.size() != topo->size()) throw InputError("initial configuration size mismatch");
    exec_.topology = std::move(topo);
    exec_.faults = std::move(fm);
    exec_.initial = normalize(*exec_.topology, exec_.faults, std::move(initial));
    exec_.seed = seed;
    const auto enabled = enabled_set(*exec_.topology, exec_.faults, exec_.initial);
    age_.assign(exec_.topology->size(), 0);
    for (ProcessId v : enabled) age_[v] = 1;
  }

  const Execution& execution() const { return exec_; }
  Execution& execution() { return exec_; }
  Execution release() { return std::move(exec_); }

  StopReason advance(const DaemonPolicy& policy, AdversaryStrategy& adversary,
                     const StopCriterion& stop) {
    const Topology& topo = *exec_.topology;
    const FaultModel& fm = exec_.faults;
    const std::size_t window = policy.fairness_window != 0 ? policy.fairness_window : topo.size();
    if (exec_.daemon_label.empty()) exec_.daemon_label = policy.label();
    if (exec_.adversary_label.empty()) exec_.adversary_label = adversary.label();

    std::size_t taken = 0;
    std::size_t script_pos = 0;
    for (;;) {
      const Configuration& cfg = exec_.last();
      if (stop.kind == StopCriterion::Kind::predicate && stop.predicate && stop.predicate(exec_))
        return finish(StopReason::predicate);
      if (taken >= stop.budget) return finish(StopReason::budget);

      const std::size_t step_index = exec_.steps.size();
      ByzWrites advice = adversary.advise(topo, fm, exec_, cfg);
      const ProcessSet enabled = enabled_set(topo, fm, cfg);

      if (stop.kind == StopCriterion::Kind::quiescent && enabled.empty() && advice.empty() &&
          adversary.exhausted(step_index))
        return finish(StopReason::quiescent);

      ProcessSet activated;
      ByzWrites writes;
      if (policy.fairness == Fairness::scripted && policy.kind != DaemonKind::synchronous) {
        if (script_pos >= policy.script.size()) return finish(StopReason::script_exhausted);
        const DaemonScriptEntry& entry = policy.script[script_pos++];
        activated = make_process_set(entry.activated);
        const bool byz_allowed = policy.byz_scheduling == ByzScheduling::every_step || entry.byzantine;
        if (policy.kind == DaemonKind::central) {
          if (activated.size() > 1)
            throw ContractViolation("central daemon activates at most one process per step");
          if (activated.empty() && byz_allowed) writes = pick_one_byzantine(advice);
        } else {
          if (activated.empty() && !enabled.empty() && (advice.empty() || !byz_allowed))
            throw ContractViolation("distributed daemon must activate a nonempty set of enabled processes");
          if (byz_allowed) writes = std::move(advice);
        }
        for (ProcessId v : activated)
          if (!set_contains(enabled, v))
            throw ContractViolation("scripted daemon activates disabled or Byzantine process " +
                                    std::to_string(v));
        check_fairness(enabled, activated, !writes.empty(), policy.kind, window);
      } else {
        switch (policy.kind) {
          case DaemonKind::synchronous:
            activated = enabled;
            writes = std::move(advice);
            break;
          case DaemonKind::distributed:
            activated = pick_distributed(enabled, policy.fairness, window);
            writes = std::move(advice);
            break;
          case DaemonKind::central: {
            const bool byz_step = !advice.empty() && (enabled.empty() || !last_was_byzantine_);
            if (byz_step)
              writes = pick_one_byzantine(advice);
            else if (!enabled.empty())
              activated = {pick_central(enabled, policy.fairness, window)};
            break;
          }
        }
      }

      Configuration next = step(topo, fm, cfg, activated, writes);
      const bool byz_only = activated.empty() && !writes.empty();
      last_was_byzantine_ = byz_only;
      update_ages(cfg, next, activated, enabled, !(byz_only && policy.kind == DaemonKind::central));
      exec_.steps.push_back({std::move(activated), std::move(writes), std::move(next)});
      ++taken;
    }
  }

 private:
  StopReason finish(StopReason r) {
    exec_.stop_reason = r;
    return r;
  }

  ByzWrites pick_one_byzantine(const ByzWrites& advice) {
    if (advice.empty()) return {};
    // Round-robin over Byzantine ids so several Byzantine processes all get turns.
    const ByzWrite* chosen = nullptr;
    for (const ByzWrite& w : advice)
      if (w.id >= byz_pointer_) {
        chosen = &w;
        break;
      }
    if (chosen == nullptr) chosen = &advice.front();
    byz_pointer_ = chosen->id + 1;
    return {*chosen};
  }

  // Remaining slack of v: how many more counted steps it may wait.
  std::size_t slack(ProcessId v, std::size_t window) const {
    return window > age_[v] ? window - age_[v] : 0;
  }

  // EDF feasibility of serving `rest` one per counted step from the next step on.
  bool feasible_without(const ProcessSet& enabled, ProcessId served, std::size_t window) const {
    std::vector<std::size_t> slacks;
    for (ProcessId v : enabled)
      if (v != served) slacks.push_back(slack(v, window));
    std::sort(slacks.begin(), slacks.end());
    for (std::size_t j = 0; j < slacks.size(); ++j)
      if (slacks[j] < j + 1) return false;
    return true;
  }

  ProcessId pick_central(const ProcessSet& enabled, Fairness fairness, std::size_t window) {
    if (fairness == Fairness::random) {
      ProcessSet safe;
      for (ProcessId v : enabled)
        if (feasible_without(enabled, v, window)) safe.push_back(v);
      if (!safe.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, safe.size() - 1);
        return safe[pick(rng_)];
      }
    }
    // Oldest first; ties broken cyclically from the round-robin pointer.
    const std::size_t n = age_.size();
    ProcessId best = enabled.front();
    auto cyclic = [&](ProcessId v) {
      return (static_cast<std::size_t>(v) + n - rr_pointer_ % n) % n;
    };
    for (ProcessId v : enabled)
      if (age_[v] > age_[best] || (age_[v] == age_[best] && cyclic(v) < cyclic(best))) best = v;
    rr_pointer_ = static_cast<std::size_t>(best) + 1;
    return best;
  }

  ProcessSet pick_distributed(const ProcessSet& enabled, Fairness fairness, std::size_t window) {
    ProcessSet out;
    if (enabled.empty()) return out;
    for (ProcessId v : enabled) {
      bool take = age_[v] >= window;
      if (!take) {
        if (fairness == Fairness::random)
          take = std::bernoulli_distribution(0.5)(rng_);
        else
          take = (static_cast<std::size_t>(v) + parity_) % 2 == 0;
      }
      if (take) out.push_back(v);
    }
    ++parity_;
    if (out.empty()) {
      if (fairness == Fairness::random) {
        std::uniform_int_distribution<std::size_t> pick(0, enabled.size() - 1);
        out.push_back(enabled[pick(rng_)]);
      } else {
        ProcessId oldest = enabled.front();
        for (ProcessId v : enabled)
          if (age_[v] > age_[oldest]) oldest = v;
        out.push_back(oldest);
      }
    }
    return out;
  }

  void check_fairness(const ProcessSet& enabled, const ProcessSet& activated, bool has_writes,
                      DaemonKind kind, std::size_t window) const {
    const bool counted = !(kind == DaemonKind::central && activated.empty() && has_writes);
    if (!counted) return;
    for (ProcessId v : enabled) {
      if (age_[v] >= window && !set_contains(activated, v)) {
        const std::size_t now = exec_.steps.size();
        throw FairnessViolation(v, now + 1 - age_[v], window);
      }
    }
  }

  void update_ages(const Configuration& before, const Configuration& after,
                   const ProcessSet& activated, const ProcessSet& enabled_before, bool counted) {
    const Topology& topo = *exec_.topology;
    for (std::size_t i = 0; i < topo.size(); ++i) {
      const auto v = static_cast<ProcessId>(i);
      if (exec_.faults.is_byzantine(v)) continue;
      if (!detail::guard_holds(topo, after, v)) {
        age_[v] = 0;
        continue;
      }
      if (set_contains(activated, v) || !set_contains(enabled_before, v))
        age_[v] = 1;
      else if (counted)
        ++age_[v];
    }
    (void)before;
  }

  Execution exec_;
  std::vector<std::size_t> age_;
  std::size_t rr_pointer_ = 0;
  std::size_t parity_ = 0;
  ProcessId byz_pointer_ = 0;
  bool last_was_byzantine_ = false;
  std::mt19937_64 rng_;
};

inline Execution run(std::shared_ptr<const Topology> topo, const FaultModel& fm, Configuration init,
                     const DaemonPolicy& daemon, AdversaryStrategy adversary,
                     const StopCriterion& stop) {
  Engine engine(std::move(topo), fm, std::move(init), daemon.seed);
  engine.advance(daemon, adversary, stop);
  return engine.release();
}

struct ReplayReport {
  bool ok = true;
  std::optional<std::size_t> divergent_step;
  std::string detail;
  explicit operator bool() const { return ok; }
};

// Re-applies every stored step and compares with the stored configuration.
inline ReplayReport replay(const Execution& execution) {
  if (!execution.topology) return {false, std::nullopt, "execution has no topology"};
  const Topology& topo = *execution.topology;
  for (std::size_t k = 0; k < execution.steps.size(); ++k) {
    const StepRecord& rec = execution.steps[k];
    try {
      const Configuration expect =
          step(topo, execution.faults, execution.configuration(k), rec.activated, rec.byz_writes);
      if (expect != rec.result) return {false, k, "stored configuration differs from recomputed step"};
    } catch (const std::exception& e) {
      return {false, k, e.what()};
    }
  }
  return {};
}

// --- trace file -------------------------------------------------------------
//
//   ssbfs-trace 1
//   seed <u64>
//   topology <hash> n <n> m <m> root <r>
//   byzantine <ids…|->
//   daemon <label>
//   adversary <label>
//   config <stamp>
//   init <id> <prnt> <level>                         (n lines)
//   step <k> act <ids|-> byz <id:prnt:level,…|-> chg <id:prnt:level,…|->
//   end <stop-reason>

namespace detail {

inline std::string hex64(std::uint64_t x) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << x;
  return s.str();
}

inline void write_states(std::ostream& out, const std::vector<std::pair<ProcessId, ProcessState>>& s) {
  if (s.empty()) {
    out << '-';
    return;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out << ',';
    out << s[i].first << ':' << s[i].second.prnt << ':' << s[i].second.level;
  }
}

inline std::vector<std::pair<ProcessId, ProcessState>> read_states(const std::string& tok) {
  std::vector<std::pair<ProcessId, ProcessState>> out;
  if (tok == "-") return out;
  std::istringstream in(tok);
  std::string item;
  while (std::getline(in, item, ',')) {
    long long id = 0;
    long long prnt = 0;
    unsigned long long level = 0;
    char c1 = 0;
    char c2 = 0;
    std::istringstream f(item);
    if (!(f >> id >> c1 >> prnt >> c2 >> level) || c1 != ':' || c2 != ':')
      throw InputError("trace: bad state record '" + item + "'");
    out.push_back({static_cast<ProcessId>(id), {static_cast<ProcessId>(prnt), static_cast<Level>(level)}});
  }
  return out;
}

inline ProcessSet read_ids(const std::string& tok) {
  ProcessSet out;
  if (tok == "-") return out;
  std::istringstream in(tok);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(static_cast<ProcessId>(std::stol(item)));
  return out;
}

}  // namespace detail

inline void write_trace(std::ostream& out, const Execution& exec) {
  const Topology& topo = *exec.topology;
  out << "ssbfs-trace 1\n";
  out << "seed " << exec.seed << '\n';
  out << "topology " << detail::hex64(topology_hash(topo)) << " n " << topo.size() << " m "
      << topo.edge_count() << " root " << topo.root() << '\n';
  out << "byzantine";
  if (exec.faults.byzantine.empty()) out << " -";
  for (ProcessId b : exec.faults.byzantine) out << ' ' << b;
  out << '\n';
  out << "daemon " << exec.daemon_label << '\n';
  out << "adversary " << exec.adversary_label << '\n';
  out << "config " << exec.config_stamp << '\n';
  for (std::size_t i = 0; i < exec.initial.size(); ++i) {
    const auto v = static_cast<ProcessId>(i);
    out << "init " << v << ' ' << exec.initial[v].prnt << ' ' << exec.initial[v].level << '\n';
  }
  for (std::size_t k = 0; k < exec.steps.size(); ++k) {
    const StepRecord& rec = exec.steps[k];
    const Configuration& before = exec.configuration(k);
    out << "step " << k << " act ";
    if (rec.activated.empty()) out << '-';
    for (std::size_t i = 0; i < rec.activated.size(); ++i) out << (i ? "," : "") << rec.activated[i];
    std::vector<std::pair<ProcessId, ProcessState>> byz;
    for (const ByzWrite& w : rec.byz_writes) byz.push_back({w.id, w.state});
    out << " byz ";
    detail::write_states(out, byz);
    std::vector<std::pair<ProcessId, ProcessState>> changed;
    for (std::size_t i = 0; i < before.size(); ++i) {
      const auto v = static_cast<ProcessId>(i);
      if (before[v] != rec.result[v]) changed.push_back({v, rec.result[v]});
    }
    out << " chg ";
    detail::write_states(out, changed);
    out << '\n';
  }
  out << "end " << to_string(exec.stop_reason) << '\n';
}

// Reads a trace produced by write_trace. The topology must be supplied and
// must match the recorded hash.
inline Execution read_trace(std::istream& in, std::shared_ptr<const Topology> topo) {
  if (!topo) throw InputError("read_trace needs a topology");
  Execution exec;
  exec.topology = topo;
  std::vector<ProcessState> init(topo->size());
  std::vector<bool> seen(topo->size(), false);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string tag;
    f >> tag;
    auto rest = [&] {
      std::string r;
      std::getline(f, r);
      if (!r.empty() && r.front() == ' ') r.erase(0, 1);
      return r;
    };
    if (tag == "ssbfs-trace") {
      header = true;
    } else if (tag == "seed") {
      f >> exec.seed;
    } else if (tag == "topology") {
      std::string hash;
      f >> hash;
      if (hash != detail::hex64(topology_hash(*topo)))
        throw InputError("trace was recorded on a different topology (hash " + hash + ")");
    } else if (tag == "byzantine") {
      std::vector<ProcessId> ids;
      std::string tok;
      while (f >> tok)
        if (tok != "-") ids.push_back(static_cast<ProcessId>(std::stol(tok)));
      exec.faults = FaultModel(std::move(ids));
      exec.faults.validate(*topo);
    } else if (tag == "daemon") {
      exec.daemon_label = rest();
    } else if (tag == "adversary") {
      exec.adversary_label = rest();
    } else if (tag == "config") {
      exec.config_stamp = rest();
    } else if (tag == "init") {
      long long id = 0;
      long long prnt = 0;
      unsigned long long level = 0;
      if (!(f >> id >> prnt >> level) || id < 0 || static_cast<std::size_t>(id) >= topo->size())
        throw InputError("trace: bad init record");
      init[static_cast<std::size_t>(id)] = {static_cast<ProcessId>(prnt), static_cast<Level>(level)};
      seen[static_cast<std::size_t>(id)] = true;
    } else if (tag == "step") {
      if (exec.initial.size() == 0) {
        for (bool s : seen)
          if (!s) throw InputError("trace: incomplete initial configuration");
        exec.initial = Configuration(init);
      }
      std::size_t k = 0;
      std::string act_tag, act, byz_tag, byz, chg_tag, chg;
      if (!(f >> k >> act_tag >> act >> byz_tag >> byz >> chg_tag >> chg) || act_tag != "act" ||
          byz_tag != "byz" || chg_tag != "chg" || k != exec.steps.size())
        throw InputError("trace: malformed step record " + std::to_string(exec.steps.size()));
      StepRecord rec;
      rec.activated = detail::read_ids(act);
      for (const auto& [id, s] : detail::read_states(byz)) rec.byz_writes.push_back({id, s});
      rec.result = exec.last();
      for (const auto& [id, s] : detail::read_states(chg)) {
        if (!topo->contains(id)) throw InputError("trace: unknown id in changes");
        rec.result[id] = s;
      }
      exec.steps.push_back(std::move(rec));
    } else if (tag == "end") {
      std::string reason;
      f >> reason;
      for (StopReason r : {StopReason::none, StopReason::quiescent, StopReason::budget,
                           StopReason::predicate, StopReason::script_exhausted})
        if (reason == to_string(r)) exec.stop_reason = r;
    } else {
      throw InputError("trace: unknown record '" + tag + "'");
    }
  }
  if (!header) throw InputError("not an ssbfs trace");
  if (exec.initial.size() == 0) {
    for (bool s : seen)
      if (!s) throw InputError("trace: incomplete initial configuration");
    exec.initial = Configuration(init);
  }
  return exec;
}

}  // namespace ssbfs
