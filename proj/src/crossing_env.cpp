#include "hpshield/crossing_env.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <stdexcept>

#include "hpshield/parser.hpp"

namespace hpshield {

namespace {

int int_key(const Config& c, const char* key, int fallback) {
  long long v = c.integer(key, fallback);
  if (v < -1'000'000 || v > 1'000'000) throw ConfigError(std::string(key) + " is out of range");
  return static_cast<int>(v);
}

}  // namespace

CrossingEnvConfig CrossingEnvConfig::from_config(const Config& c) {
  CrossingEnvConfig out;
  out.width = int_key(c, "crossing.width", out.width);
  out.height = int_key(c, "crossing.height", out.height);
  out.road_row = int_key(c, "crossing.road_row", out.road_row);
  out.speed_min = int_key(c, "crossing.speed_min", out.speed_min);
  out.speed_max = int_key(c, "crossing.speed_max", out.speed_max);
  out.seed_count = int_key(c, "crossing.seeds", out.seed_count);
  out.sprite = int_key(c, "crossing.sprite", out.sprite);
  out.step_cap = int_key(c, "crossing.step_cap", out.step_cap);
  out.collision_radius = int_key(c, "crossing.collision_radius", out.collision_radius);
  out.seed_reward = c.number("crossing.seed_reward", out.seed_reward);
  out.collision_penalty = c.number("crossing.collision_penalty", out.collision_penalty);
  out.goal_reward = c.number("crossing.goal_reward", out.goal_reward);
  out.noise_sigma = c.number("crossing.noise_sigma", out.noise_sigma);
  out.validate();
  return out;
}

void CrossingEnvConfig::validate() const {
  if (width < 3 || height < 3) throw ConfigError("crossing: grid must be at least 3x3");
  if (width > 4096 || height > 4096) throw ConfigError("crossing: grid too large");
  if (road_row <= 0 || road_row >= height - 1) throw ConfigError("crossing.road_row must be an interior row");
  if (speed_min < 0 || speed_min > speed_max || speed_max >= width) {
    throw ConfigError("crossing: need 0 <= speed_min <= speed_max < width");
  }
  // rows other than the goal, the start and the road
  if (seed_count < 0 || seed_count > height - 3) throw ConfigError("crossing.seeds out of range");
  if (sprite < 4 || sprite > 64) throw ConfigError("crossing.sprite must be in [4, 64]");
  if (step_cap < 1) throw ConfigError("crossing.step_cap must be at least 1");
  if (collision_radius < 0 || 2 * collision_radius + 1 > width) throw ConfigError("crossing.collision_radius out of range");
  if (!(noise_sigma >= 0)) throw ConfigError("crossing.noise_sigma must be >= 0");
}

State CrossingState::symbols() const {
  State s;
  s.set("agent_row", agent_row);
  s.set("agent_col", agent_col);
  s.set("car_col", car_col);
  s.set("car_speed", car_speed);
  s.set("seed_count", static_cast<double>(seeds.size()));
  return s;
}

int advance_car(int col, int speed, int width) {
  int next = (col - speed) % width;
  return next < 0 ? next + width : next;
}

bool collides(const CrossingState& s, const CrossingEnvConfig& cfg) {
  return s.agent_row == cfg.road_row && std::abs(s.agent_col - s.car_col) <= cfg.collision_radius;
}

Frame crossing_sprite(const std::string& label, int size) {
  if (size < 4) throw std::invalid_argument("sprite size must be at least 4");
  auto n = static_cast<std::size_t>(size);
  Frame f(n, n);
  int mid = size / 2;
  for (int r = 1; r < size - 1; ++r) {
    for (int c = 1; c < size - 1; ++c) {
      double v;
      if (label == "agent") {
        v = (r == mid || c == mid) ? 1.0 : 0.35;
      } else if (label == "car") {
        v = (r % 2 == 1) ? 1.0 : 0.45;
      } else if (label == "seed") {
        v = (r == c || r + c == size - 1) ? 0.9 : 0.15;
      } else {
        throw std::invalid_argument("no sprite for '" + label + "'");
      }
      f(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = v;
    }
  }
  return f;
}

Frame render(const CrossingState& s, const CrossingEnvConfig& cfg, std::uint64_t noise_seed) {
  Frame f(static_cast<std::size_t>(cfg.frame_height()), static_cast<std::size_t>(cfg.frame_width()));
  const int sz = cfg.sprite;
  Frame seed = crossing_sprite("seed", sz);
  for (const auto& [r, c] : s.seeds) f.blit(seed, r * sz, c * sz);
  f.blit(crossing_sprite("car", sz), cfg.road_row * sz, s.car_col * sz);
  f.blit(crossing_sprite("agent", sz), s.agent_row * sz, s.agent_col * sz);
  if (cfg.noise_sigma > 0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (std::size_t r = 0; r < f.height(); ++r) {
      for (std::size_t c = 0; c < f.width(); ++c) f(r, c) += noise(rng);
    }
    f.clip();
  }
  return f;
}

GuardTable crossing_guard_table(const CrossingEnvConfig& cfg) {
  cfg.validate();
  const std::string W = std::to_string(cfg.width);
  const std::string reach = std::to_string((cfg.collision_radius + 1) * (cfg.collision_radius + 1));
  // Car column after its move, without and with wraparound.
  const std::string clear =
      "((car_col - car_speed >= 0 & (car_col - car_speed - agent_col)^2 >= " + reach + ") | "
      "(car_col - car_speed <= -1 & (car_col - car_speed + " + W + " - agent_col)^2 >= " + reach + "))";
  auto entering = [&](int from_row) {
    const std::string lo = std::to_string(from_row) + ".5";
    const std::string hi = std::to_string(from_row - 1) + ".5";
    // agent_row is an integer: it differs from from_row iff it is at least half a row away
    return "agent_row >= " + lo + " | agent_row <= " + hi + " | " + clear;
  };
  std::vector<GuardEntry> entries;
  entries.push_back({"down", {}, parse_formula(entering(cfg.road_row - 1))});
  entries.push_back({"stay", {}, parse_formula("true")});
  entries.push_back({"up", {}, parse_formula(entering(cfg.road_row + 1))});
  return GuardTable(std::move(entries), "stay");
}

CrossingEnv::CrossingEnv(CrossingEnvConfig config) : config_(config) {
  config_.validate();
  state_.agent_row = config_.height - 1;
  state_.agent_col = config_.agent_col();
}

void CrossingEnv::set_state(const CrossingState& s) {
  if (s.agent_row < 0 || s.agent_row >= config_.height || s.agent_col < 0 || s.agent_col >= config_.width ||
      s.car_col < 0 || s.car_col >= config_.width) {
    throw std::invalid_argument("crossing state outside the grid");
  }
  state_ = s;
  std::sort(state_.seeds.begin(), state_.seeds.end());
  steps_ = 0;
  done_ = false;
}

Frame CrossingEnv::frame() const {
  std::seed_seq seq{static_cast<std::uint32_t>(episode_seed_), static_cast<std::uint32_t>(episode_seed_ >> 32),
                    static_cast<std::uint32_t>(steps_)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return render(state_, config_, (static_cast<std::uint64_t>(words[0]) << 32) | words[1]);
}

Observation CrossingEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CrossingState s;
  s.agent_row = config_.height - 1;
  s.agent_col = config_.agent_col();
  s.car_col = std::uniform_int_distribution<int>(0, config_.width - 1)(rng);
  s.car_speed = std::uniform_int_distribution<int>(config_.speed_min, config_.speed_max)(rng);
  std::vector<int> rows;
  for (int r = 1; r < config_.height - 1; ++r) {
    if (r != config_.road_row) rows.push_back(r);
  }
  std::shuffle(rows.begin(), rows.end(), rng);
  for (int i = 0; i < config_.seed_count; ++i) s.seeds.emplace_back(rows[static_cast<std::size_t>(i)], s.agent_col);
  set_state(s);
  episode_seed_ = seed;
  Observation obs;
  obs.frame = frame();
  return obs;
}

StepOutcome CrossingEnv::step(const std::string& action) {
  if (done_) throw std::invalid_argument("episode is over; call reset");
  int dr;
  if (action == "up") {
    dr = -1;
  } else if (action == "down") {
    dr = 1;
  } else if (action == "stay") {
    dr = 0;
  } else {
    throw std::invalid_argument("crossing env has no action '" + action + "'");
  }
  if (dr == 0 && state_.agent_row == config_.road_row) dr = state_.heading == Heading::Up ? -1 : 1;
  if (dr != 0) state_.heading = dr < 0 ? Heading::Up : Heading::Down;
  state_.agent_row = std::clamp(state_.agent_row + dr, 0, config_.height - 1);
  state_.car_col = advance_car(state_.car_col, state_.car_speed, config_.width);
  ++steps_;

  StepOutcome out;
  auto seed = std::find(state_.seeds.begin(), state_.seeds.end(), std::pair{state_.agent_row, state_.agent_col});
  if (seed != state_.seeds.end()) {
    state_.seeds.erase(seed);
    out.reward += config_.seed_reward;
  }
  if (collides(state_, config_)) {
    out.violation = true;
    out.reward -= config_.collision_penalty;
    out.done = true;
  } else if (state_.agent_row == 0) {
    out.reward += config_.goal_reward;
    out.done = true;
  }
  if (steps_ >= config_.step_cap) out.done = true;
  done_ = out.done;
  out.observation.frame = frame();
  return out;
}

}  // namespace hpshield
