#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "hpshield/ast.hpp"
#include "hpshield/state.hpp"

namespace hpshield {

enum class FlowExit { DurationReached, DomainExit };

struct FlowOptions {
  double step = 1e-3;
  /// Width below which the domain-exit bisection stops.
  double event_tolerance = 1e-9;
  /// Record every n-th integration step in FlowResult::trajectory (0: only the
  /// start and end points).
  std::size_t record_every = 0;
  bool record = false;
};

struct FlowResult {
  State state;
  double elapsed = 0;
  FlowExit exit = FlowExit::DurationReached;
  std::vector<std::pair<double, State>> trajectory;
};

/// Precompiled continuous evolution. Integrates with classic fixed-step RK4;
/// variables not governed by an equation stay constant. The domain is checked
/// after every step; on the first failure the exit time is bisected and the
/// last domain-satisfying state is returned. A domain that is false in the
/// start state yields elapsed 0 and DomainExit.
///
/// Not safe for concurrent calls on the same object.
class OdeFlow {
 public:
  /// Throws std::invalid_argument unless `ode` is an ODE program.
  explicit OdeFlow(const Program& ode);
  ~OdeFlow();
  OdeFlow(OdeFlow&&) noexcept;
  OdeFlow& operator=(OdeFlow&&) noexcept;

  FlowResult operator()(const State& s, double duration, const FlowOptions& options = {}) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

FlowResult flow(const Program& ode, const State& s, double duration, const FlowOptions& options = {});

}  // namespace hpshield
