#include <gtest/gtest.h>

#include <sstream>

#include "hpshield/agent.hpp"
#include "hpshield/car_env.hpp"
#include "hpshield/crossing_env.hpp"
#include "hpshield/parser.hpp"
#include "support/value_iteration.hpp"

using namespace hpshield;

TEST(Discretizer, BinsAndClamping) {
  Discretizer d({{"x", 0, 10, 5}, {"v", -1, 1, 2}});
  EXPECT_EQ(d.size(), 10U);
  EXPECT_EQ(d.unknown(), 10U);
  EXPECT_EQ(d.index(State{{"x", 0}, {"v", -1}}), 0U);
  EXPECT_EQ(d.index(State{{"x", 3.9}, {"v", 0.5}}), 3U);
  EXPECT_EQ(d.index(State{{"x", -50}, {"v", 0}}), 1U);
  EXPECT_EQ(d.index(State{{"x", 10}, {"v", 7}}), 9U);
  EXPECT_EQ(d.index(State{{"x", 1e9}, {"v", -1e9}}), 8U);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::vector<std::size_t> b = d.bins(i);
    EXPECT_EQ(b[0] * 2 + b[1], i);
  }
  EXPECT_THROW(d.index(State{{"x", 1}}), EvalError);
  EXPECT_THROW(Discretizer({{"x", 1, 1, 3}}), std::invalid_argument);
  EXPECT_THROW(Discretizer({{"x", 0, 1, 0}}), std::invalid_argument);
  EXPECT_EQ(Discretizer::car(100).size(), 50U * 25U);
}

TEST(QTableTest, ActionsSortedAndGreedyTies) {
  QTable q(3, {"brake", "accel"});
  EXPECT_EQ(q.actions(), (std::vector<std::string>{"accel", "brake"}));
  EXPECT_EQ(q.argmax(0), 0U);
  q.set(0, q.action_index("brake"), 1);
  EXPECT_EQ(q.argmax(0), 1U);
  EXPECT_DOUBLE_EQ(q.max(0), 1);
  EXPECT_THROW(q.action_index("coast"), std::invalid_argument);
  EXPECT_THROW(QTable(1, {"a", "a"}), std::invalid_argument);
}

TEST(SelectAction, GreedyAndExploring) {
  QTable q(2, {"accel", "brake"});
  std::mt19937_64 rng(0);
  q.set(0, 1, 1.0);
  EXPECT_EQ(q.actions()[select_action(q, 0, 0.0, rng)], "brake");
  EXPECT_EQ(q.actions()[select_action(q, 1, 0.0, rng)], "accel");
  std::mt19937_64 a(42), b(42);
  std::vector<std::size_t> da, db;
  for (int i = 0; i < 100; ++i) {
    da.push_back(select_action(q, 0, 1.0, a));
    db.push_back(select_action(q, 0, 1.0, b));
  }
  EXPECT_EQ(da, db);
  EXPECT_NE(std::count(da.begin(), da.end(), 0U), 0);
  EXPECT_NE(std::count(da.begin(), da.end(), 1U), 0);
}

TEST(QUpdate, Arithmetic) {
  QTable q(2, {"accel", "brake"});
  q_update(q, 0, 0, 5, 1, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(q.get(0, 0), 5);
  QTable before = q;
  q_update(q, 0, 1, 123, 0, 0.0, 0.9);
  EXPECT_EQ(q, before);
  QTable r(2, {"accel", "brake"});
  r.set(1, 1, 10);
  q_update(r, 0, 0, 1, 1, 0.5, 0.9);
  EXPECT_DOUBLE_EQ(r.get(0, 0), 5.0);
  q_update(r, 0, 1, 1, std::nullopt, 0.5, 0.9);
  EXPECT_DOUBLE_EQ(r.get(0, 1), 0.5);
}

TEST(TrainConfigTest, ScheduleAndValidation) {
  TrainConfig c;
  c.eps_start = 1;
  c.eps_end = 0.1;
  c.eps_decay_episodes = 10;
  EXPECT_DOUBLE_EQ(c.epsilon(0), 1);
  EXPECT_NEAR(c.epsilon(5), 0.55, 1e-12);
  EXPECT_DOUBLE_EQ(c.epsilon(10), 0.1);
  EXPECT_DOUBLE_EQ(c.epsilon(1000), 0.1);
  Config cfg{{"train.alpha", "0"}};
  EXPECT_THROW(TrainConfig::from_config(cfg), ConfigError);
  Config pen{{"train.penalty", "5"}};
  EXPECT_THROW(TrainConfig::from_config(pen), ConfigError);
  Config ok{{"train.episodes", "7"}, {"train.shield", "off"}, {"train.penalty", "-10"}};
  TrainConfig t = TrainConfig::from_config(ok);
  EXPECT_EQ(t.episodes, 7U);
  EXPECT_FALSE(t.shield);
  EXPECT_EQ(t.penalty, -10);
}

namespace {

struct CarRig {
  CarEnvConfig cfg;
  CarEnv env{cfg};
  GuardTable table = car_guard_table();
  SymbolicObserver observer;
  Discretizer disc = Discretizer::car(cfg.m);
  AgentSetup setup() { return {env, observer, disc, &table}; }
};

std::size_t total_violations(const TrainingLog& log) {
  std::size_t n = 0;
  for (const auto& e : log) n += e.violations;
  return n;
}

}  // namespace

TEST(Train, DeterministicGivenSeed) {
  auto run = [](std::uint64_t seed) {
    CarRig rig;
    TrainConfig tc;
    tc.episodes = 60;
    tc.seed = seed;
    TrainResult r = train(rig.setup(), tc);
    std::ostringstream out;
    write_training_csv(out, r.log);
    return std::make_pair(out.str(), r.q);
  };
  auto a = run(3), b = run(3), c = run(4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.first, c.first);
  EXPECT_EQ(a.first.substr(0, a.first.find('\n')), "episode,reward,violations,interventions,steps");
}

TEST(Train, ShieldedRunsHaveNoViolations) {
  CarRig rig;
  TrainConfig tc;
  tc.episodes = 400;
  tc.eps_decay_episodes = 400;
  TrainResult r = train(rig.setup(), tc);
  EXPECT_EQ(total_violations(r.log), 0U);
  std::size_t interventions = 0;
  for (const auto& e : r.log) interventions += e.interventions;
  EXPECT_GT(interventions, 0U);
}

TEST(Train, UnshieldedExplorationViolates) {
  CarRig rig;
  TrainConfig tc;
  tc.episodes = 1000;
  tc.shield = false;
  tc.eps_start = tc.eps_end = 0.5;
  TrainResult r = train(rig.setup(), tc);
  EXPECT_GT(total_violations(r.log), 0U);
  for (const auto& e : r.log) EXPECT_EQ(e.interventions, 0U);
}

namespace {

// One-step world: every action pays 1 and ends the episode.
class OneStepEnv : public Environment {
 public:
  std::vector<std::string> actions() const override { return {"go", "stop"}; }
  Observation reset(std::uint64_t) override { return {State{{"k", 1}}, "", std::nullopt}; }
  StepOutcome step(const std::string&) override { return {{State{{"k", 1}}, "", std::nullopt}, 1.0, true, false}; }
  State truth() const override { return State{{"k", 1}}; }
};

}  // namespace

TEST(Train, PenaltyTargetsTheRejectedProposal) {
  OneStepEnv env;
  SymbolicObserver observer;
  Discretizer disc({{"k", 0, 2, 1}});
  GuardTable table({{"go", {}, parse_formula("k <= 0.5")}, {"stop", {}, parse_formula("true")}}, "stop");
  TrainConfig tc;
  tc.episodes = 1;
  tc.alpha = 0.5;
  tc.eps_start = tc.eps_end = 0;
  tc.penalty = -10;
  TrainResult r = train({env, observer, disc, &table}, tc);
  EXPECT_DOUBLE_EQ(r.q.get(0, r.q.action_index("go")), -5);
  EXPECT_DOUBLE_EQ(r.q.get(0, r.q.action_index("stop")), 0.5);
  EXPECT_EQ(r.log[0].interventions, 1U);

  tc.penalty = 0;
  TrainResult plain = train({env, observer, disc, &table}, tc);
  EXPECT_DOUBLE_EQ(plain.q.get(0, plain.q.action_index("go")), 0);
}

TEST(Train, StepHookSeesEveryStep) {
  CarRig rig;
  TrainConfig tc;
  tc.episodes = 5;
  std::size_t calls = 0;
  TrainResult r = train(rig.setup(), tc, std::nullopt, [&](const StepRecord& rec) {
    ++calls;
    EXPECT_EQ(rec.intervened, rec.proposed != rec.executed);
    EXPECT_LE(rec.after.get("x"), 100);
  });
  std::size_t steps = 0;
  for (const auto& e : r.log) steps += e.steps;
  EXPECT_EQ(calls, steps);
}

TEST(Perceiver, EstimatesSpeedFromConsecutiveFrames) {
  CrossingEnvConfig cfg;
  CrossingEnv env(cfg);
  CrossingPerceiver p(cfg, crossing_perception(cfg));
  Observation first = env.reset(9);
  Perceived a = p.observe(first, env);
  ASSERT_TRUE(std::holds_alternative<PerceptionFailure>(a));
  EXPECT_EQ(std::get<PerceptionFailure>(a).label, "car_speed");
  for (int i = 0; i < 5; ++i) {
    StepOutcome out = env.step("stay");
    Perceived b = p.observe(out.observation, env);
    ASSERT_TRUE(std::holds_alternative<State>(b));
    State truth = env.truth();
    for (const char* var : {"agent_row", "agent_col", "car_col", "car_speed"}) {
      EXPECT_EQ(std::get<State>(b).get(var), truth.get(var)) << var;
    }
  }
  p.reset();
  EXPECT_TRUE(std::holds_alternative<PerceptionFailure>(p.observe(env.reset(10), env)));
}

TEST(Train, PerceptionFailureAlwaysFallsBack) {
  CrossingEnvConfig cfg;
  cfg.noise_sigma = 0.3;  // heavy noise so that some frames fail
  CrossingEnv env(cfg);
  CrossingPerceiver perceiver(cfg, crossing_perception(cfg, 0.9));
  Discretizer disc = Discretizer::crossing(cfg);
  GuardTable table = crossing_guard_table(cfg);
  TrainConfig tc;
  tc.episodes = 8;
  std::size_t failures = 0;
  train({env, perceiver, disc, &table}, tc, std::nullopt, [&](const StepRecord& rec) {
    if (!rec.observed) {
      ++failures;
      EXPECT_EQ(rec.executed, "stay");
    }
  });
  EXPECT_GT(failures, tc.episodes);
}

TEST(Train, CrossingWithPerceptionHasNoCollisions) {
  CrossingEnvConfig cfg;
  CrossingEnv env(cfg);
  CrossingPerceiver perceiver(cfg, crossing_perception(cfg));
  Discretizer disc = Discretizer::crossing(cfg);
  GuardTable table = crossing_guard_table(cfg);
  TrainConfig tc;
  tc.episodes = 60;
  tc.eps_decay_episodes = 30;
  TrainResult r = train({env, perceiver, disc, &table}, tc);
  EXPECT_EQ(total_violations(r.log), 0U);
  std::size_t goals = 0;
  for (const auto& e : r.log) goals += e.reward > 0;
  EXPECT_GT(goals, 0U);
}

TEST(Train, PolicyDump) {
  CarRig rig;
  TrainConfig tc;
  tc.episodes = 3;
  TrainResult r = train(rig.setup(), tc);
  std::ostringstream out;
  write_policy_csv(out, r.q, rig.disc);
  std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "state,x_bin,v_bin,action,q_accel,q_brake");
  EXPECT_NE(text.find("\n1250,,,accel"), std::string::npos);
}

TEST(ValueIterationOracle, BoundsTheShieldedAccelerator) {
  CarEnvConfig cfg;
  oracle::CarValueIteration vi(cfg);
  CarRig rig;
  TrainConfig ev;
  ev.episodes = 200;
  ev.seed = 5;
  QTable always_accel(rig.disc.size() + 1, rig.env.actions());
  double accel = 0;
  for (const auto& e : evaluate(rig.setup(), always_accel, ev)) accel += e.reward / 200;
  double optimum = vi.mean_initial_value(5, 200);
  // upper bound: full progress to m plus the stop bonus from every start
  double bound = 0;
  for (std::size_t e = 0; e < 200; ++e) {
    bound += (cfg.m - rig.env.reset(episode_seed(5, e)).state->get("x") + cfg.stop_bonus) / 200;
  }
  EXPECT_GE(optimum, 0.95 * accel);
  EXPECT_LE(optimum, bound + 2.0);
}
