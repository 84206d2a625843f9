#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hpshield/agent.hpp"
#include "hpshield/car_env.hpp"
#include "hpshield/check.hpp"
#include "hpshield/config.hpp"
#include "hpshield/model_file.hpp"
#include "hpshield/shield.hpp"

namespace hpshield::cli {

enum ExitCode : int { kExitOk = 0, kExitCounterexample = 1, kExitInputError = 2, kExitInsufficientData = 3 };

/// Every key the commands read, with its built-in value. Environment
/// overrides only apply to keys present here (or set by a config file).
Config default_config();

/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

/// "1,2,3" or "0:4" (inclusive range) or a mix of both.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// check

CheckSettings check_settings(const Config& config);
/// Grid from check.grid.<var> and check.fixed.<var>, filtered by `init`.
std::vector<State> check_grid(const Config& config, const Formula& init, const State& overrides = {});

struct CheckRun {
  std::vector<State> initial;
  CheckSettings settings;
  Verdict verdict;
};

CheckRun run_check(const SafetyModel& model, const Config& config);
/// Writes check_trace.csv into `out` on a counterexample.
int cmd_check(const std::filesystem::path& model, const Config& config, const std::filesystem::path& out,
              std::ostream& report);

// experiments

/// Environment, observer, discretization and shield chosen by
/// experiment.env (car | crossing) and experiment.perception.
struct Experiment {
  std::unique_ptr<Environment> env;
  std::unique_ptr<Observer> observer;
  std::unique_ptr<Discretizer> discretizer;
  std::unique_ptr<GuardTable> shield;

  AgentSetup setup() const { return {*env, *observer, *discretizer, shield.get()}; }
};

Experiment make_experiment(const Config& config);

int cmd_simulate(const Config& config, const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
                 std::ostream& report);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
};

std::vector<SeedRun> run_train(const Config& config, const std::vector<std::uint64_t>& seeds);
/// Mean over runs per episode.
void write_summary_csv(std::ostream& out, const std::vector<SeedRun>& runs);
int cmd_train(const Config& config, const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
              std::ostream& report);

struct SweepRun {
  double penalty = 0;
  std::vector<SeedRun> runs;
};

/// Throws ConfigError for an empty penalty list.
std::vector<SweepRun> run_sweep(const Config& config, const std::vector<double>& penalties,
                                const std::vector<std::uint64_t>& seeds);
/// Columns: penalty, seed, episode, reward, violations, interventions, steps.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRun>& sweep);
int cmd_penalty_sweep(const Config& config, const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out, std::ostream& report);

// adaptation

struct AdaptReport {
  ModelParams believed;
  std::size_t phase1_episodes = 0;
  std::size_t phase1_steps = 0;
  std::size_t phase1_violations = 0;
  std::optional<std::size_t> first_flag_step;  // 1-based step count within phase 1
  std::map<std::string, double, std::less<>> residuals;  // max per variable over phase 1
  double max_residual = 0;
  std::size_t brake_samples = 0;
  std::size_t accel_samples = 0;
  std::vector<TransitionRecord> transitions;

  bool consistent = true;
  std::optional<ModelParams> estimated;
  std::optional<ModelParams> guard_params;  // A', factor * b', eps'
  std::optional<GuardTable> table;
  std::size_t phase3_episodes = 0;
  std::size_t phase3_violations = 0;
  std::optional<bool> check_safe;  // bounded check of the model with learned parameters
  std::string check_note;
};

/// Throws ShieldError(InsufficientData) when phase 1 collects fewer braking
/// samples than adapt.min_brake_samples.
AdaptReport run_adapt(const Config& config, std::uint64_t seed);
void print_adapt_report(std::ostream& out, const AdaptReport& report);
int cmd_adapt(const Config& config, const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
              std::ostream& report);

}  // namespace hpshield::cli
