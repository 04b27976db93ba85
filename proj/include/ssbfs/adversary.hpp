#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssbfs/error.hpp"
#include "ssbfs/execution.hpp"
#include "ssbfs/graph.hpp"
#include "ssbfs/protocol.hpp"

namespace ssbfs {

enum class AdversaryKind {
  silent,
  fake_root,
  mirror_root,
  oscillator,
  random,
  scripted,
  // Byzantine processes execute R_v like correct non-root processes. Used by
  // the impossibility replays ("b behaves as a correct process").
  protocol_following,
};

struct ScriptedWrite {
  std::size_t step = 0;
  ProcessId id = 0;
  ProcessState state;
};

// Produces the Byzantine writes for each step. Owned by one execution; the
// random strategy carries its generator as internal state.
class AdversaryStrategy {
 public:
  static AdversaryStrategy silent() { return AdversaryStrategy(AdversaryKind::silent); }
  static AdversaryStrategy fake_root() { return AdversaryStrategy(AdversaryKind::fake_root); }
  static AdversaryStrategy mirror_root() { return AdversaryStrategy(AdversaryKind::mirror_root); }
  static AdversaryStrategy protocol_following() {
    return AdversaryStrategy(AdversaryKind::protocol_following);
  }

  // Alternates (⊥,0) and (first neighbor, high_level) every `period` steps.
  // high_level = 0 picks 2·D + 2, which never looks like a shortcut.
  static AdversaryStrategy oscillator(std::size_t period, Level high_level = 0) {
    if (period == 0) throw InputError("oscillator period must be positive");
    AdversaryStrategy a(AdversaryKind::oscillator);
    a.period_ = period;
    a.high_level_ = high_level;
    return a;
  }

  static AdversaryStrategy random(std::uint64_t seed) {
    AdversaryStrategy a(AdversaryKind::random);
    a.seed_ = seed;
    a.rng_.seed(seed);
    return a;
  }

  static AdversaryStrategy scripted(std::vector<ScriptedWrite> script) {
    AdversaryStrategy a(AdversaryKind::scripted);
    std::stable_sort(script.begin(), script.end(),
                     [](const ScriptedWrite& x, const ScriptedWrite& y) { return x.step < y.step; });
    a.script_ = std::move(script);
    return a;
  }

  AdversaryKind kind() const { return kind_; }

  std::string label() const {
    switch (kind_) {
      case AdversaryKind::silent: return "silent";
      case AdversaryKind::fake_root: return "fake-root";
      case AdversaryKind::mirror_root: return "mirror-root";
      case AdversaryKind::protocol_following: return "protocol-following";
      case AdversaryKind::oscillator:
        return "oscillator period=" + std::to_string(period_) + " high=" + std::to_string(high_level_);
      case AdversaryKind::random: return "random seed=" + std::to_string(seed_);
      case AdversaryKind::scripted: return "scripted writes=" + std::to_string(script_.size());
    }
    return "unknown";
  }

  // True when the strategy will never write again on its own initiative.
  // Reactive strategies (fake/mirror/protocol-following) are done as soon as
  // their advice is empty; oscillator and random never finish.
  bool exhausted(std::size_t step_index) const {
    switch (kind_) {
      case AdversaryKind::oscillator:
      case AdversaryKind::random: return false;
      case AdversaryKind::scripted: return script_.empty() || step_index > script_.back().step;
      default: return true;
    }
  }

  // Writes for the step leaving `cfg`, which is configuration
  // prefix.steps.size() of the trace.
  ByzWrites advise(const Topology& topo, const FaultModel& fm, const Execution& prefix,
                   const Configuration& cfg) {
    const std::size_t step_index = prefix.steps.size();
    ByzWrites out;
    switch (kind_) {
      case AdversaryKind::silent: break;
      case AdversaryKind::fake_root:
        for (ProcessId b : fm.byzantine)
          if (cfg[b] != ProcessState{kNoParent, 0}) out.push_back({b, {kNoParent, 0}});
        break;
      case AdversaryKind::mirror_root:
        // b copies r's state; with b starting identical to r this is exactly
        // "repeat r's action one step later".
        for (ProcessId b : fm.byzantine)
          if (cfg[b] != cfg[topo.root()]) out.push_back({b, cfg[topo.root()]});
        break;
      case AdversaryKind::protocol_following:
        for (ProcessId b : fm.byzantine)
          if (detail::guard_holds(topo, cfg, b)) out.push_back({b, detail::rule_result(topo, cfg, b)});
        break;
      case AdversaryKind::oscillator: {
        const bool low = (step_index / period_) % 2 == 0;
        const Level high = high_level_ != 0 ? high_level_ : 2 * Level{topo.diameter()} + 2;
        for (ProcessId b : fm.byzantine) {
          const auto nbrs = topo.neighbors(b);
          const ProcessState s = low || nbrs.empty() ? ProcessState{kNoParent, 0}
                                                     : ProcessState{nbrs.front(), high};
          out.push_back({b, s});
        }
        break;
      }
      case AdversaryKind::random: {
        const Level cap = 2 * Level{topo.diameter()};
        for (ProcessId b : fm.byzantine) {
          const auto nbrs = topo.neighbors(b);
          std::uniform_int_distribution<Level> level(0, cap);
          std::uniform_int_distribution<std::size_t> pick(0, nbrs.size());
          const std::size_t k = pick(rng_);
          out.push_back({b, {k == nbrs.size() ? kNoParent : nbrs[k], level(rng_)}});
        }
        break;
      }
      case AdversaryKind::scripted:
        for (const ScriptedWrite& w : script_) {
          if (w.step != step_index) continue;
          if (!fm.is_byzantine(w.id))
            throw ContractViolation("scripted write targets correct process " + std::to_string(w.id));
          out.push_back({w.id, w.state});
        }
        break;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ByzWrite& x, const ByzWrite& y) { return x.id < y.id; });
    // Later entries for the same id win.
    ByzWrites dedup;
    for (const ByzWrite& w : out) {
      if (!dedup.empty() && dedup.back().id == w.id)
        dedup.back() = w;
      else
        dedup.push_back(w);
    }
    return dedup;
  }

 private:
  explicit AdversaryStrategy(AdversaryKind kind) : kind_(kind) {}

  AdversaryKind kind_;
  std::size_t period_ = 1;
  Level high_level_ = 0;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  std::vector<ScriptedWrite> script_;
};

// Script file: `step id prnt level` per line.
inline std::vector<ScriptedWrite> parse_adversary_script(std::istream& in) {
  std::vector<ScriptedWrite> script;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long step = 0;
    long long id = 0;
    long long prnt = 0;
    long long level = 0;
    std::string rest;
    if (!(fields >> step >> id >> prnt >> level) || (fields >> rest) || step < 0 || id < 0 ||
        prnt < -1 || level < 0 || static_cast<Level>(level) > kMaxLevel)
      throw InputError("adversary script line " + std::to_string(line_no) +
                       ": expected `step id prnt level`");
    script.push_back({static_cast<std::size_t>(step), static_cast<ProcessId>(id),
                      {static_cast<ProcessId>(prnt), static_cast<Level>(level)}});
  }
  return script;
}

}  // namespace ssbfs
