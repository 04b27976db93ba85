#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ssbfs/graph.hpp"
#include "ssbfs/protocol.hpp"

namespace ssbfs {

enum class StopReason { none, quiescent, budget, predicate, script_exhausted };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::quiescent: return "quiescent";
    case StopReason::budget: return "budget";
    case StopReason::predicate: return "predicate";
    case StopReason::script_exhausted: return "script-exhausted";
  }
  return "none";
}

// steps[k] takes configuration k to configuration k + 1.
struct StepRecord {
  ProcessSet activated;
  ByzWrites byz_writes;
  Configuration result;
};

struct Execution {
  std::shared_ptr<const Topology> topology;
  FaultModel faults;
  Configuration initial;
  std::vector<StepRecord> steps;
  std::uint64_t seed = 0;
  StopReason stop_reason = StopReason::none;

  // Header metadata for the trace file.
  std::string daemon_label;
  std::string adversary_label;
  std::string config_stamp;

  std::size_t configuration_count() const { return steps.size() + 1; }
  const Configuration& configuration(std::size_t i) const {
    return i == 0 ? initial : steps.at(i - 1).result;
  }
  const Configuration& last() const { return steps.empty() ? initial : steps.back().result; }
};

}  // namespace ssbfs
