#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "hpshield/check.hpp"
#include "hpshield/eval.hpp"
#include "hpshield/parser.hpp"
#include "hpshield/perception.hpp"

using namespace hpshield;

namespace {

// Keys without a built-in value that may still come from the environment.
const char* const kOptionalKeys[] = {"env.b_actual", "env.A_actual", "perception.templates"};

void merge_optional_environment(Config& config) {
  for (std::string key : kOptionalKeys) {
    std::string name = "HPSHIELD_";
    for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(name.c_str())) config.set(key, v);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shielded learning experiments over hybrid program models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "out", seed_text;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed_text, "seed list, e.g. 0,1,2 or 0:9");
  app.add_option("--set", overrides, "override a config key: key=value (repeatable)");

  auto* check = app.add_subcommand("check", "bounded check of a model file");
  std::string model_path;
  check->add_option("model", model_path, "model file with init/program/safe sections")->required();
  std::string depth;
  check->add_option("--depth", depth, "loop depth (check.depth)");

  auto* simulate = app.add_subcommand("simulate", "run episodes with a fixed proposal policy");
  std::string policy, sim_shield, sim_episodes;
  simulate->add_option("--policy", policy, "random or an action id (simulate.policy)");
  simulate->add_option("--shield", sim_shield, "on|off (simulate.shield)");
  simulate->add_option("--episodes", sim_episodes, "episodes per seed (simulate.episodes)");

  auto* trainc = app.add_subcommand("train", "shielded Q-learning, one log per seed");
  auto* sweep = app.add_subcommand("penalty-sweep", "train once per penalty value on identical seeds");
  auto* adapt = app.add_subcommand("adapt", "detect model mismatch, re-estimate, resynthesize, rerun");

  std::string env_kind, shield, perception, episodes, penalties;
  for (auto* sub : {simulate, trainc, sweep}) {
    sub->add_option("--env", env_kind, "car|crossing (experiment.env)");
    sub->add_option("--perception", perception, "on|off (experiment.perception)");
  }
  for (auto* sub : {trainc, sweep}) {
    sub->add_option("--shield", shield, "on|off (train.shield)");
    sub->add_option("--episodes", episodes, "episodes per run (train.episodes)");
  }
  sweep->add_option("--penalties", penalties, "comma separated penalty values (sweep.penalties)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitInputError;
  }

  auto on_off = [](const std::string& v, const std::string& flag) {
    if (v == "on" || v == "true" || v == "1") return std::string("true");
    if (v == "off" || v == "false" || v == "0") return std::string("false");
    throw ConfigError(flag + " expects on or off, got '" + v + "'");
  };

  try {
    Config config = cli::default_config();
    if (!config_path.empty()) config.merge_file(config_path);
    config.merge_environment("HPSHIELD_");
    merge_optional_environment(config);
    if (!env_kind.empty()) config.set("experiment.env", env_kind);
    if (!perception.empty()) config.set("experiment.perception", on_off(perception, "--perception"));
    if (!shield.empty()) config.set("train.shield", on_off(shield, "--shield"));
    if (!sim_shield.empty()) config.set("simulate.shield", on_off(sim_shield, "--shield"));
    if (!episodes.empty()) config.set("train.episodes", episodes);
    if (!sim_episodes.empty()) config.set("simulate.episodes", sim_episodes);
    if (!policy.empty()) config.set("simulate.policy", policy);
    if (!penalties.empty() || sweep->count("--penalties")) config.set("sweep.penalties", penalties);
    if (!depth.empty()) config.set("check.depth", depth);
    for (const std::string& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    std::vector<std::uint64_t> seeds =
        cli::parse_seed_list(seed_text.empty() ? config.string("experiment.seeds") : seed_text);

    if (*check) return cli::cmd_check(model_path, config, out_dir, std::cout);
    if (*simulate) return cli::cmd_simulate(config, seeds, out_dir, std::cout);
    if (*trainc) return cli::cmd_train(config, seeds, out_dir, std::cout);
    if (*sweep) return cli::cmd_penalty_sweep(config, seeds, out_dir, std::cout);
    if (*adapt) return cli::cmd_adapt(config, seeds, out_dir, std::cout);
  } catch (const ShieldError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ShieldError::Kind::InsufficientData ? cli::kExitInsufficientData : cli::kExitInputError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (at offset " << e.span().start << ")\n";
    return cli::kExitInputError;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "; raise check.budget or shrink the grid\n";
    return cli::kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInputError;
  }
  return cli::kExitInputError;
}
