#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssbfs {

// Malformed input: bad ids, broken files, invalid parameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition (e.g. root listed as Byzantine).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Misuse of the step semantics: activating a disabled or Byzantine process,
// a Byzantine write aimed at a correct process.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class FairnessViolation : public std::runtime_error {
 public:
  FairnessViolation(int process, std::size_t window_start, std::size_t window)
      : std::runtime_error("fairness violated: process " + std::to_string(process) +
                           " enabled without activation for " + std::to_string(window) +
                           " consecutive configurations starting at " +
                           std::to_string(window_start)),
        process_(process),
        window_start_(window_start) {}

  int process() const { return process_; }
  std::size_t window_start() const { return window_start_; }

 private:
  int process_;
  std::size_t window_start_;
};

// Raised when an analysis cannot decide (stability budget exhausted at a
// configuration that matters).
class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(const std::string& what, std::size_t index)
      : std::runtime_error(what + " (configuration " + std::to_string(index) + ")"),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssbfs
