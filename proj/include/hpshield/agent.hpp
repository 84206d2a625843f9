#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hpshield/config.hpp"
#include "hpshield/env.hpp"
#include "hpshield/perception.hpp"
#include "hpshield/shield.hpp"

namespace hpshield {

struct CrossingEnvConfig;

/// Uniform bins over [lower, upper]; values outside fall into the edge bins.
struct BinSpec {
  std::string var;
  double lower = 0;
  double upper = 1;
  std::size_t bins = 1;
};

class Discretizer {
 public:
  /// Throws std::invalid_argument unless lower < upper and bins >= 1.
  explicit Discretizer(std::vector<BinSpec> specs);

  /// x in [0, m] with 50 bins, v in [0, 12] with 25 bins.
  static Discretizer car(double m);
  /// One bin per cell of agent_row and car_col, one per car speed.
  static Discretizer crossing(const CrossingEnvConfig& cfg);

  const std::vector<BinSpec>& specs() const { return specs_; }
  /// Number of regular indices. Index size() stands for "state unknown".
  std::size_t size() const { return size_; }
  std::size_t unknown() const { return size_; }
  /// Mixed-radix index, first variable most significant. Throws EvalError
  /// for missing variables.
  std::size_t index(const State& s) const;
  std::vector<std::size_t> bins(std::size_t index) const;

 private:
  std::vector<BinSpec> specs_;
  std::size_t size_ = 1;
};

/// Dense table of action values, one row per discrete state plus the unknown
/// row. Actions are kept sorted; all entries start at 0.
class QTable {
 public:
  QTable(std::size_t states, std::vector<std::string> actions);

  std::size_t states() const { return states_; }
  const std::vector<std::string>& actions() const { return actions_; }
  /// Throws std::invalid_argument for an unknown action.
  std::size_t action_index(const std::string& action) const;

  double get(std::size_t s, std::size_t a) const { return values_[s * actions_.size() + a]; }
  void set(std::size_t s, std::size_t a, double v) { values_[s * actions_.size() + a] = v; }
  double max(std::size_t s) const;
  /// Greedy action; ties go to the lexicographically first action.
  std::size_t argmax(std::size_t s) const;

  bool operator==(const QTable&) const = default;

 private:
  std::size_t states_;
  std::vector<std::string> actions_;
  std::vector<double> values_;
};

/// Epsilon-greedy: uniform over actions with probability eps, else argmax.
std::size_t select_action(const QTable& q, std::size_t s, double eps, std::mt19937_64& rng);

/// Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max Q(s',.)); a missing
/// successor (terminal step) contributes no future value.
void q_update(QTable& q, std::size_t s, std::size_t a, double reward, std::optional<std::size_t> next, double alpha,
              double gamma);

struct TrainConfig {
  std::size_t episodes = 1000;
  double alpha = 0.1;
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::size_t eps_decay_episodes = 500;  // linear decay from start to end
  double penalty = 0;                    // target for rejected proposals; 0 disables
  std::uint64_t seed = 0;
  bool shield = true;
  double margin = 0;

  /// Keys under `train.`: episodes, alpha, gamma, eps_start, eps_end,
  /// eps_decay, penalty, seed, shield, margin.
  static TrainConfig from_config(const Config& config);
  /// Throws ConfigError.
  void validate() const;
  double epsilon(std::size_t episode) const;
};

/// Seed passed to the environment's reset for an episode of a run.
std::uint64_t episode_seed(std::uint64_t run_seed, std::size_t episode);

struct EpisodeStats {
  std::size_t episode = 0;
  double reward = 0;
  std::size_t violations = 0;
  std::size_t interventions = 0;
  std::size_t steps = 0;
  double wall_seconds = 0;
};

using TrainingLog = std::vector<EpisodeStats>;

/// Columns: episode, reward, violations, interventions, steps. Wall time is
/// left out so logs are bit-reproducible.
void write_training_csv(std::ostream& out, const TrainingLog& log);

/// Turns environment observations into symbolic states. A failure result
/// makes the agent treat the state as unknown.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual void reset() {}
  virtual Perceived observe(const Observation& obs, const Environment& env) = 0;
};

/// Uses the observation's state (symbolic environments).
class SymbolicObserver : public Observer {
 public:
  Perceived observe(const Observation& obs, const Environment& env) override;
};

/// Uses the environment's ground truth (perception switched off).
class TruthObserver : public Observer {
 public:
  Perceived observe(const Observation& obs, const Environment& env) override;
};

/// Template matching on crossing frames, rounded to cells. The car's speed
/// is the leftward displacement since the previous frame, so the first frame
/// of an episode fails with "car_speed".
class CrossingPerceiver : public Observer {
 public:
  CrossingPerceiver(const CrossingEnvConfig& cfg, PerceptionSetup setup);
  void reset() override { last_car_col_.reset(); }
  Perceived observe(const Observation& obs, const Environment& env) override;

 private:
  int width_;
  PerceptionSetup setup_;
  std::optional<int> last_car_col_;
};

struct StepRecord {
  std::size_t episode = 0;
  std::size_t step = 0;
  State before;  // ground truth
  std::optional<State> observed;
  std::string proposed;
  std::string executed;
  bool intervened = false;
  double reward = 0;
  bool done = false;
  bool violation = false;
  State after;  // ground truth
};

using StepHook = std::function<void(const StepRecord&)>;

struct AgentSetup {
  Environment& env;
  Observer& observer;
  const Discretizer& discretizer;
  const GuardTable* shield = nullptr;  // required when cfg.shield is on
};

struct TrainResult {
  QTable q;
  TrainingLog log;
};

/// Epsilon-greedy Q-learning. Each step observes, discretizes, proposes,
/// shields (an unknown state always gets the fallback), steps the env and
/// learns on the executed action; with a nonzero penalty a rejected proposal
/// is also moved toward the penalty. Deterministic given cfg.seed.
TrainResult train(const AgentSetup& setup, const TrainConfig& cfg, std::optional<QTable> initial = {},
                  const StepHook& hook = {});

/// Greedy rollouts of a fixed table (no learning, eps = 0) on the episode
/// seeds of `cfg.seed`.
TrainingLog evaluate(const AgentSetup& setup, const QTable& q, const TrainConfig& cfg, const StepHook& hook = {});

/// Policy dump: state, <var>_bin..., action, q_<action>... for every visited
/// (nonzero) row and the unknown row.
void write_policy_csv(std::ostream& out, const QTable& q, const Discretizer& d);

}  // namespace hpshield
