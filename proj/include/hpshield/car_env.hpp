#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hpshield/config.hpp"
#include "hpshield/env.hpp"
#include "hpshield/flow.hpp"
#include "hpshield/shield.hpp"

namespace hpshield {

/// Stop-sign car. `params` are the dynamics the controller believes in (they
/// appear in observations); the car actually brakes with b_actual and
/// accelerates with A_actual.
struct CarEnvConfig {
  ModelParams params{1, 1, 0.1};
  double m = 100;
  double b_actual = 1;
  double A_actual = 1;
  double x_min = 0, x_max = 50;
  double v_min = 0, v_max = 5;
  double progress_weight = 1;
  double violation_penalty = 100;
  double stop_bonus = 50;
  double stop_tolerance = 2;
  std::size_t step_cap = 500;
  double ode_step = 0.025;

  /// Keys under `env.`: A, b, eps, m, b_actual, A_actual (default to b and A),
  /// x_min, x_max, v_min, v_max, progress_weight, violation_penalty,
  /// stop_bonus, stop_tolerance, step_cap, ode_step.
  static CarEnvConfig from_config(const Config& config);
  /// Throws ConfigError.
  void validate() const;
};

/// Shield of the stop-sign controller: `brake` (fallback) and guarded `accel`.
GuardTable car_guard_table();
/// The plant run after each decision, for mismatch detection.
Program car_plant();

class CarEnv : public Environment {
 public:
  explicit CarEnv(CarEnvConfig config);

  std::vector<std::string> actions() const override { return {"accel", "brake"}; }
  /// Samples x uniformly, then v uniformly among values with
  /// v^2 <= 2 b (m - x) under the believed b.
  Observation reset(std::uint64_t seed) override;
  StepOutcome step(const std::string& action) override;
  State truth() const override { return state_; }

  /// Continue from an explicit state (x, v required; the rest is filled in).
  void set_state(double x, double v);
  const State& state() const { return state_; }
  const CarEnvConfig& config() const { return config_; }
  std::size_t steps() const { return steps_; }
  /// Elapsed time of the last step (shorter than eps when the car stopped).
  double last_elapsed() const { return last_elapsed_; }

 private:
  State make_state(double x, double v) const;

  CarEnvConfig config_;
  OdeFlow ode_;
  State state_;
  std::size_t steps_ = 0;
  bool done_ = false;
  double last_elapsed_ = 0;
};

}  // namespace hpshield
