#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpshield/frame.hpp"
#include "hpshield/state.hpp"

namespace hpshield {

/// What the agent sees. Symbolic environments fill `state`; visual ones fill
/// `frame` and leave `state` to perception. When perception fails `state` is
/// empty and `failure` names what could not be recovered.
struct Observation {
  std::optional<State> state;
  std::string failure;
  std::optional<Frame> frame;
};

struct StepOutcome {
  Observation observation;
  double reward = 0;
  bool done = false;
  bool violation = false;  // the step entered an unsafe state
};

/// Episodic environment with named discrete actions.
class Environment {
 public:
  virtual ~Environment() = default;
  /// Actions in lexicographic order.
  virtual std::vector<std::string> actions() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  /// Throws std::invalid_argument for unknown actions or stepping a finished episode.
  virtual StepOutcome step(const std::string& action) = 0;
  /// Ground-truth symbolic state, for logging.
  virtual State truth() const = 0;
};

}  // namespace hpshield
