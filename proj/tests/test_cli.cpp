#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "hpshield/crossing_env.hpp"
#include "hpshield/parser.hpp"

using namespace hpshield;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = HPSHIELD_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("hpshield_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Config small(std::size_t episodes) {
  Config c = cli::default_config();
  c.set("train.episodes", std::to_string(episodes));
  c.set("train.eps_decay", std::to_string(episodes / 2));
  return c;
}

}  // namespace

TEST(Seeds, ListsAndRanges) {
  EXPECT_EQ(cli::parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(cli::parse_seed_list("0:2, 7"), (std::vector<std::uint64_t>{0, 1, 2, 7}));
  EXPECT_THROW(cli::parse_seed_list(""), ConfigError);
  EXPECT_THROW(cli::parse_seed_list("2:1"), ConfigError);
  EXPECT_THROW(cli::parse_seed_list("-1"), ConfigError);
}

TEST(AtomicWrite, ReplacesWholeFile) {
  fs::path dir = scratch("atomic");
  fs::create_directories(dir);
  cli::write_file_atomic(dir / "a.txt", [](std::ostream& o) { o << "first\n"; });
  cli::write_file_atomic(dir / "a.txt", [](std::ostream& o) { o << "second\n"; });
  EXPECT_EQ(slurp(dir / "a.txt"), "second\n");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
}

TEST(CmdCheck, ExitCodes) {
  Config c = cli::default_config();
  std::ostringstream report;
  fs::path out = scratch("check");
  EXPECT_EQ(cli::cmd_check(kSource / "models/stop_sign.hp", c, out, report), cli::kExitOk);
  EXPECT_FALSE(fs::exists(out / "check_trace.csv"));
  EXPECT_EQ(cli::cmd_check(kSource / "models/stop_sign_no_reaction.hp", c, out, report), cli::kExitCounterexample);
  std::string trace = slurp(out / "check_trace.csv");
  EXPECT_EQ(trace.rfind("time,event_kind,", 0), 0U);
  EXPECT_THROW(cli::cmd_check(kSource / "tests/data/bad_syntax.hp", c, out, report), ParseError);
}

TEST(CmdCheck, GridFollowsConfig) {
  Config c = cli::default_config();
  Formula init = parse_formula("v^2 <= 2*b*(m-x) & v >= 0 & A >= 0 & b > 0");
  EXPECT_EQ(cli::check_grid(c, init).size(), 59U);
  c.set("check.grid.x", "0, 50");
  EXPECT_EQ(cli::check_grid(c, init).size(), 12U);
  c.set("check.grid.x", "5:1:1");
  EXPECT_THROW(cli::check_grid(c, init), ConfigError);
}

TEST(CmdTrain, ShieldedRunsHaveNoViolations) {
  Config c = small(150);
  std::ostringstream report;
  fs::path out = scratch("train");
  ASSERT_EQ(cli::cmd_train(c, {0, 1, 2}, out, report), cli::kExitOk);
  for (int s = 0; s < 3; ++s) {
    EXPECT_TRUE(fs::exists(out / ("train_seed" + std::to_string(s) + ".csv")));
    EXPECT_TRUE(fs::exists(out / ("policy_seed" + std::to_string(s) + ".csv")));
  }
  std::istringstream summary(slurp(out / "summary.csv"));
  std::string line;
  std::getline(summary, line);
  EXPECT_EQ(line, "episode,reward_mean,violations_mean,interventions_mean,steps_mean,runs");
  std::size_t rows = 0;
  while (std::getline(summary, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 6U);
    EXPECT_EQ(cells[2], "0");
    EXPECT_EQ(cells[5], "3");
  }
  EXPECT_EQ(rows, 150U);
}

TEST(CmdTrain, ShieldOffViolates) {
  Config c = small(100);
  c.set("train.shield", "false");
  std::size_t violations = 0;
  for (const auto& e : cli::run_train(c, {0}).front().result.log) violations += e.violations;
  EXPECT_GT(violations, 0U);
}

TEST(CmdTrain, CrossingWithPerceptionHasNoCollisions) {
  Config c = small(10);
  c.set("experiment.env", "crossing");
  c.set("experiment.perception", "true");
  for (const auto& e : cli::run_train(c, {4}).front().result.log) EXPECT_EQ(e.violations, 0U);
}

TEST(CmdTrain, BadEnvironmentName) {
  Config c = small(1);
  c.set("experiment.env", "boat");
  EXPECT_THROW(cli::run_train(c, {0}), ConfigError);
}

TEST(CmdSweep, DeterministicAndConsistentWithTrain) {
  Config c = small(60);
  std::ostringstream report;
  fs::path a = scratch("sweep_a"), b = scratch("sweep_b");
  ASSERT_EQ(cli::cmd_penalty_sweep(c, {0, 1}, a, report), cli::kExitOk);
  ASSERT_EQ(cli::cmd_penalty_sweep(c, {0, 1}, b, report), cli::kExitOk);
  std::string sa = slurp(a / "sweep.csv");
  EXPECT_EQ(sa, slurp(b / "sweep.csv"));
  // 3 penalties x 2 seeds x 60 episodes plus the header
  EXPECT_EQ(std::count(sa.begin(), sa.end(), '\n'), 3 * 2 * 60 + 1);

  auto sweep = cli::run_sweep(c, {0}, {1});
  auto plain = cli::run_train(c, {1});
  EXPECT_EQ(sweep.front().runs.front().result.q, plain.front().result.q);
  ASSERT_EQ(sweep.front().runs.front().result.log.size(), plain.front().result.log.size());
  for (std::size_t i = 0; i < plain.front().result.log.size(); ++i) {
    EXPECT_EQ(sweep.front().runs.front().result.log[i].reward, plain.front().result.log[i].reward);
  }
}

TEST(CmdSweep, EmptyPenaltySetIsAnError) {
  Config c = small(5);
  EXPECT_THROW(cli::run_sweep(c, {}, {0}), ConfigError);
  c.set("sweep.penalties", "");
  std::ostringstream report;
  EXPECT_THROW(cli::cmd_penalty_sweep(c, {0}, scratch("sweep_empty"), report), ConfigError);
}

TEST(CmdAdapt, ConsistentModelIsLeftAlone) {
  Config c = cli::default_config();
  c.set("adapt.phase1_episodes", "5");
  cli::AdaptReport r = cli::run_adapt(c, 0);
  EXPECT_TRUE(r.consistent);
  EXPECT_FALSE(r.first_flag_step);
  EXPECT_FALSE(r.table);
  std::ostringstream out;
  cli::print_adapt_report(out, r);
  EXPECT_NE(out.str().find("model consistent"), std::string::npos);
}

TEST(CmdAdapt, DegradedBrakesAreRelearned) {
  Config c = cli::default_config();
  c.set("env.b_actual", "0.5");
  c.set("adapt.phase3_episodes", "200");
  c.set("adapt.check_depth", "8");
  cli::AdaptReport r = cli::run_adapt(c, 3);
  ASSERT_FALSE(r.consistent);
  ASSERT_TRUE(r.first_flag_step);
  EXPECT_LE(*r.first_flag_step, 50U);
  EXPECT_NEAR(r.residuals.at("v"), 0.05, 1e-9);
  ASSERT_TRUE(r.estimated);
  EXPECT_NEAR(r.estimated->b, 0.5, 1e-9);
  EXPECT_EQ(r.phase3_violations, 0U);
  ASSERT_TRUE(r.check_safe);
  EXPECT_TRUE(*r.check_safe);
}

TEST(CmdAdapt, BrakesTooWeakForAnySampledSpeed) {
  Config c = cli::default_config();
  c.set("env.b_actual", "0.05");
  c.set("adapt.phase3_episodes", "200");
  c.set("adapt.check", "false");
  cli::AdaptReport r = cli::run_adapt(c, 1);
  ASSERT_TRUE(r.estimated);
  EXPECT_GT(r.phase1_violations, 0U);
  EXPECT_EQ(r.phase3_violations, 0U);
}

TEST(CmdAdapt, TooFewBrakingSamples) {
  Config c = cli::default_config();
  c.set("env.b_actual", "0.5");
  c.set("adapt.phase1_episodes", "1");
  c.set("adapt.min_brake_samples", "100000");
  try {
    cli::run_adapt(c, 0);
    FAIL() << "expected InsufficientData";
  } catch (const ShieldError& e) {
    EXPECT_EQ(e.kind(), ShieldError::Kind::InsufficientData);
  }
}

TEST(CmdSimulate, WritesOneLogPerSeed) {
  Config c = cli::default_config();
  c.set("simulate.policy", "accel");
  c.set("simulate.episodes", "2");
  std::ostringstream report;
  fs::path out = scratch("simulate");
  ASSERT_EQ(cli::cmd_simulate(c, {0, 5}, out, report), cli::kExitOk);
  std::string log = slurp(out / "simulate_seed5.csv");
  EXPECT_EQ(log.rfind("episode,step,A,a,b,eps,m,t,v,x,observed,proposed,action,intervened,reward,done,violation\n", 0),
            0U);
  EXPECT_EQ(log.find(",1\n"), std::string::npos);  // no violation column set
  c.set("simulate.policy", "fly");
  EXPECT_THROW(cli::cmd_simulate(c, {0}, out, report), ConfigError);
}
