#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpshield/ast.hpp"
#include "hpshield/exec.hpp"
#include "hpshield/state.hpp"

namespace hpshield {

class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(std::size_t explored)
      : std::runtime_error("exploration budget exhausted after " + std::to_string(explored) + " configurations"),
        explored_(explored) {}
  std::size_t explored() const { return explored_; }

 private:
  std::size_t explored_;
};

/// Finite abstraction of a program's nondeterminism.
///
/// Sample and dwell lists are terms evaluated in each initial state, so they
/// may mention constant parameters (e.g. `eps/4`).
struct CheckSettings {
  std::size_t loop_depth = 20;
  std::map<std::string, std::vector<Term>, std::less<>> samples;  // for `x := *`
  std::vector<Term> dwell_times;
  /// A dyadic step keeps integration of polynomial dynamics exact, so states
  /// reached along different paths compare equal.
  FlowOptions flow{1.0 / 64};
  /// Maximum number of branching configurations expanded (0: unlimited).
  std::size_t budget = 50'000'000;
};

struct Counterexample {
  std::size_t initial_index = 0;
  State initial;
  std::vector<Decision> decisions;
  Trace trace;
  State terminal;
};

struct CheckStats {
  std::size_t initial_states = 0;
  std::size_t expanded = 0;  // branching configurations expanded
  std::size_t pruned = 0;    // configurations skipped as already covered
  std::size_t terminals = 0; // terminal states checked against the postcondition
  std::size_t distinct = 0;  // distinct configurations recorded
};

struct Verdict {
  std::optional<Counterexample> counterexample;
  CheckStats stats;
  bool safe() const { return !counterexample.has_value(); }
};

/// Exhaustive bounded exploration of [program] post over the given initial
/// states. Configurations are expanded in order of loop iterations used; within
/// one iteration count, initial states are taken in order and branches depth
/// first (branch index, then sample order, then dwell order; stopping a loop
/// before iterating it). The counterexample reported is therefore one with the
/// fewest loop iterations, and the result does not depend on anything but the
/// inputs. A configuration already expanded with no more loop iterations used
/// is not expanded again; states are compared exactly. The counterexample trace
/// is produced by replaying the decisions through run(). Throws BudgetExceeded
/// when the budget is exhausted and EvalError for evaluation failures.
Verdict bounded_check(const Program& program, const Formula& post, const std::vector<State>& initial_states,
                      const CheckSettings& settings);

/// Initial-state grid: cartesian product of per-variable value lists, combined
/// with fixed values, in lexicographic order of variable names.
std::vector<State> grid_states(const std::map<std::string, std::vector<double>, std::less<>>& axes,
                               const State& fixed);

/// Parse "start:stop:step" (inclusive) or a comma separated list of numbers.
std::vector<double> parse_value_list(const std::string& text);

}  // namespace hpshield
