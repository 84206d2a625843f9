#include "hpshield/car_env.hpp"

#include <cmath>
#include <stdexcept>

#include "hpshield/models.hpp"
#include "hpshield/parser.hpp"

namespace hpshield {

GuardTable car_guard_table() {
  return extract_guards(parse_program(models::kStopSignController), "brake", {"brake", "accel"});
}

Program car_plant() { return parse_program(models::kStopSignPlant); }

CarEnvConfig CarEnvConfig::from_config(const Config& c) {
  CarEnvConfig out;
  out.params.A = c.number("env.A", out.params.A);
  out.params.b = c.number("env.b", out.params.b);
  out.params.eps = c.number("env.eps", out.params.eps);
  out.m = c.number("env.m", out.m);
  out.b_actual = c.number("env.b_actual", out.params.b);
  out.A_actual = c.number("env.A_actual", out.params.A);
  out.x_min = c.number("env.x_min", out.x_min);
  out.x_max = c.number("env.x_max", out.x_max);
  out.v_min = c.number("env.v_min", out.v_min);
  out.v_max = c.number("env.v_max", out.v_max);
  out.progress_weight = c.number("env.progress_weight", out.progress_weight);
  out.violation_penalty = c.number("env.violation_penalty", out.violation_penalty);
  out.stop_bonus = c.number("env.stop_bonus", out.stop_bonus);
  out.stop_tolerance = c.number("env.stop_tolerance", out.stop_tolerance);
  long long cap = c.integer("env.step_cap", static_cast<long long>(out.step_cap));
  if (cap < 1) throw ConfigError("env.step_cap must be at least 1");
  out.step_cap = static_cast<std::size_t>(cap);
  out.ode_step = c.number("env.ode_step", out.ode_step);
  out.validate();
  return out;
}

void CarEnvConfig::validate() const {
  try {
    params.validate();
  } catch (const ShieldError& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  if (!(b_actual > 0)) throw ConfigError("env.b_actual must be > 0");
  if (!(A_actual >= 0)) throw ConfigError("env.A_actual must be >= 0");
  if (!(x_min <= x_max) || !(x_max <= m)) throw ConfigError("env: need x_min <= x_max <= m");
  if (!(v_min >= 0) || !(v_min <= v_max)) throw ConfigError("env: need 0 <= v_min <= v_max");
  if (v_min * v_min > 2 * params.b * (m - x_min)) {
    throw ConfigError("env: no initial state satisfies v^2 <= 2*b*(m-x)");
  }
  if (!(ode_step > 0)) throw ConfigError("env.ode_step must be > 0");
  if (!(stop_tolerance >= 0)) throw ConfigError("env.stop_tolerance must be >= 0");
}

CarEnv::CarEnv(CarEnvConfig config) : config_(config), ode_(parse_program(models::kStopSignOde)) {
  config_.validate();
  state_ = make_state(config_.x_min, config_.v_min);
}

State CarEnv::make_state(double x, double v) const {
  State s;
  s.set("x", x);
  s.set("v", v);
  s.set("a", 0);
  s.set("t", 0);
  s.set("m", config_.m);
  config_.params.store(s);
  return s;
}

void CarEnv::set_state(double x, double v) {
  state_ = make_state(x, v);
  steps_ = 0;
  done_ = false;
}

Observation CarEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(config_.x_min, config_.x_max);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    double x = config_.x_max > config_.x_min ? ux(rng) : config_.x_min;
    double vcap = std::min(config_.v_max, std::sqrt(2 * config_.params.b * (config_.m - x)));
    if (vcap < config_.v_min) continue;
    double v = vcap > config_.v_min ? std::uniform_real_distribution<double>(config_.v_min, vcap)(rng) : vcap;
    // Guard against rounding in the square root.
    while (v * v > 2 * config_.params.b * (config_.m - x)) v = std::nextafter(v, 0.0);
    set_state(x, v);
    return {state_, "", std::nullopt};
  }
  throw std::runtime_error("could not sample an initial state satisfying the precondition");
}

StepOutcome CarEnv::step(const std::string& action) {
  if (done_) throw std::invalid_argument("episode is over; call reset");
  double a;
  if (action == "brake") {
    a = -config_.b_actual;
  } else if (action == "accel") {
    a = config_.A_actual;
  } else {
    throw std::invalid_argument("car env has no action '" + action + "'");
  }
  double x0 = state_.get("x");
  State s = state_;
  s.set("a", a);
  s.set("t", 0);
  FlowOptions fo;
  fo.step = config_.ode_step;
  FlowResult r = ode_(s, config_.params.eps, fo);
  state_ = r.state;
  last_elapsed_ = r.elapsed;
  ++steps_;

  double x = state_.get("x");
  double v = state_.get("v");
  StepOutcome out;
  out.violation = x > config_.m;
  bool stopped_near = v <= 1e-6 && std::abs(config_.m - x) <= config_.stop_tolerance;
  out.done = out.violation || stopped_near || steps_ >= config_.step_cap;
  out.reward = config_.progress_weight * (x - x0);
  if (out.violation) out.reward -= config_.violation_penalty;
  if (stopped_near && !out.violation) out.reward += config_.stop_bonus;
  out.observation = {state_, "", std::nullopt};
  done_ = out.done;
  return out;
}

}  // namespace hpshield
