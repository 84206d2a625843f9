#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hpshield/config.hpp"
#include "hpshield/env.hpp"
#include "hpshield/frame.hpp"
#include "hpshield/shield.hpp"

namespace hpshield {

/// Grid world: the agent walks up its column from the bottom row to row 0,
/// crossing a road on which a single car drives left with wraparound. Seeds
/// in the agent's column pay a reward when picked up.
struct CrossingEnvConfig {
  int width = 16;
  int height = 16;
  int road_row = 8;
  int speed_min = 1;
  int speed_max = 3;
  int seed_count = 3;
  int sprite = 8;  // pixels per cell
  int step_cap = 100;
  int collision_radius = 1;
  double seed_reward = 1;
  double collision_penalty = 10;
  double goal_reward = 5;
  double noise_sigma = 0;

  int agent_col() const { return width / 2; }
  int frame_height() const { return height * sprite; }
  int frame_width() const { return width * sprite; }

  /// Keys under `crossing.`: width, height, road_row, speed_min, speed_max,
  /// seeds, sprite, step_cap, collision_radius, seed_reward,
  /// collision_penalty, goal_reward, noise_sigma.
  static CrossingEnvConfig from_config(const Config& config);
  /// Throws ConfigError.
  void validate() const;
};

enum class Heading { Up, Down };

struct CrossingState {
  int agent_row = 0;
  int agent_col = 0;
  int car_col = 0;
  int car_speed = 1;
  Heading heading = Heading::Up;
  std::vector<std::pair<int, int>> seeds;  // (row, col), sorted

  /// Variables agent_row, agent_col, car_col, car_speed, seed_count.
  State symbols() const;
  bool operator==(const CrossingState&) const = default;
};

/// Car column after one step of leftward motion.
int advance_car(int col, int speed, int width);
bool collides(const CrossingState& s, const CrossingEnvConfig& cfg);

/// Sprites are sprite x sprite patches with a zero border; each class has its
/// own interior pattern. Labels: agent, car, seed.
Frame crossing_sprite(const std::string& label, int size);

/// Draws seeds, then the car, then the agent on a zero background. Objects
/// placed outside the grid (for example car_col = -1) are not drawn. With
/// noise_sigma > 0 adds Gaussian noise drawn from `noise_seed` and clips.
Frame render(const CrossingState& s, const CrossingEnvConfig& cfg, std::uint64_t noise_seed = 0);

/// Shield over agent_row, agent_col, car_col, car_speed. `up` and `down` are
/// admissible unless they step onto the road while the car, after its move,
/// would be within the collision radius of the agent's column. `stay` is the
/// fallback with guard true.
GuardTable crossing_guard_table(const CrossingEnvConfig& cfg);

class CrossingEnv : public Environment {
 public:
  explicit CrossingEnv(CrossingEnvConfig config);

  std::vector<std::string> actions() const override { return {"down", "stay", "up"}; }
  /// Observations carry the rendered frame and no symbolic state.
  Observation reset(std::uint64_t seed) override;
  /// The agent moves first (never resting on the road: `stay` there keeps
  /// its heading), then the car. Ends on collision, at row 0, or at the cap.
  StepOutcome step(const std::string& action) override;
  State truth() const override { return state_.symbols(); }

  /// Start from an explicit state (for tests and exhaustive search).
  void set_state(const CrossingState& s);
  const CrossingState& state() const { return state_; }
  const CrossingEnvConfig& config() const { return config_; }

 private:
  Frame frame() const;

  CrossingEnvConfig config_;
  CrossingState state_;
  std::uint64_t episode_seed_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

}  // namespace hpshield
