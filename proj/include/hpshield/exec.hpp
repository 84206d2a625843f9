#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hpshield/ast.hpp"
#include "hpshield/flow.hpp"
#include "hpshield/state.hpp"

namespace hpshield {

class ResolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a branching decision is asked for. For loops the branch count is 2:
/// index 0 stops, index 1 runs the body once more; the question is asked
/// before every iteration.
struct ChoiceContext {
  enum class Kind { Choice, Loop };
  Kind kind;
  const Program& node;
  std::size_t iteration;  // loops: iterations completed so far
  const State& state;
};

/// Resolves the nondeterminism of a hybrid program. Nondeterministic-choice
/// trees are presented flattened, with their branches left to right.
class Resolver {
 public:
  virtual ~Resolver() = default;
  virtual std::size_t choose(std::size_t branch_count, const ChoiceContext& context) = 0;
  virtual double sample_any(const std::string& var, const State& state) = 0;
  /// Requested dwell time of a continuous evolution (non-negative).
  virtual double duration(const Program& ode, const State& state) = 0;
};

struct ChoiceDecision {
  std::size_t index;
  bool operator==(const ChoiceDecision&) const = default;
};
struct SampleDecision {
  double value;
  bool operator==(const SampleDecision&) const = default;
};
struct DwellDecision {
  double duration;
  bool operator==(const DwellDecision&) const = default;
};
using Decision = std::variant<ChoiceDecision, SampleDecision, DwellDecision>;

std::string to_string(const Decision& d);

/// Replays a recorded decision list. Throws ResolverError when the script runs
/// out or the next recorded decision is of the wrong kind.
class ScriptedResolver : public Resolver {
 public:
  explicit ScriptedResolver(std::vector<Decision> script) : script_(std::move(script)) {}
  std::size_t choose(std::size_t branch_count, const ChoiceContext& context) override;
  double sample_any(const std::string& var, const State& state) override;
  double duration(const Program& ode, const State& state) override;
  std::size_t consumed() const { return next_; }

 private:
  const Decision& take(const char* expected);
  std::vector<Decision> script_;
  std::size_t next_ = 0;
};

struct TraceEvent {
  enum class Kind { Initial, Discrete, Continuous, TestFailure };
  Kind kind;
  double time = 0;   // accumulated continuous time after the event
  State state;       // state after the event
  std::string description;
  double duration = 0;  // continuous events
};

using Trace = std::vector<TraceEvent>;

const char* to_string(TraceEvent::Kind kind);

/// CSV with columns time,event_kind,<variables in name order>. Variables
/// unbound at an event leave their cell empty.
void write_trace_csv(std::ostream& out, const Trace& trace);

struct RunOptions {
  FlowOptions flow;
  /// Record every n-th integration step of each evolution as its own
  /// continuous event (0: one event per evolution).
  std::size_t record_every = 0;
};

struct RunResult {
  enum class Outcome { Completed, Aborted };
  Outcome outcome = Outcome::Completed;
  State state;  // final state; for aborted runs the state at the failed test
  Trace trace;
  std::vector<Decision> decisions;
  /// The failing test condition (or evolution domain) of an aborted run.
  std::optional<Formula> failed_test;

  bool completed() const { return outcome == Outcome::Completed; }
};

/// One execution of `program` from `initial`. Every nondeterministic decision
/// is delegated to the resolver and recorded in RunResult::decisions, so that a
/// ScriptedResolver over those decisions reproduces the run exactly. A
/// continuous evolution whose domain is false on entry aborts the run like a
/// failed test.
RunResult run(const Program& program, const State& initial, Resolver& resolver,
              const RunOptions& options = {});

/// Compiled program for repeated runs.
class Executor {
 public:
  explicit Executor(const Program& program, RunOptions options = {});
  ~Executor();
  Executor(Executor&&) noexcept;
  Executor& operator=(Executor&&) noexcept;

  RunResult operator()(const State& initial, Resolver& resolver) const;
  const Program& program() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hpshield
