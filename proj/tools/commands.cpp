#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "hpshield/crossing_env.hpp"
#include "hpshield/eval.hpp"
#include "hpshield/exec.hpp"
#include "hpshield/frame.hpp"
#include "hpshield/parser.hpp"
#include "hpshield/perception.hpp"
#include "hpshield/printer.hpp"

namespace hpshield::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return format_number(v); }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string part; std::getline(in, part, sep);) {
    auto b = part.find_first_not_of(" \t");
    auto e = part.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const std::string& s : split(text, ',')) out.push_back(parse_number(s, what));
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

TrainConfig train_config(const Config& config, std::uint64_t seed) {
  TrainConfig t = TrainConfig::from_config(config);
  t.seed = seed;
  t.validate();
  return t;
}

std::string env_kind(const Config& config) {
  std::string kind = config.string("experiment.env");
  if (kind != "car" && kind != "crossing") throw ConfigError("experiment.env must be car or crossing, got '" + kind + "'");
  return kind;
}

}  // namespace

Config default_config() {
  Config c;
  c.set("experiment.env", "car");
  c.set("experiment.perception", "false");
  c.set("experiment.seeds", "0");

  CarEnvConfig car;
  c.set("env.A", num(car.params.A));
  c.set("env.b", num(car.params.b));
  c.set("env.eps", num(car.params.eps));
  c.set("env.m", num(car.m));
  c.set("env.x_min", num(car.x_min));
  c.set("env.x_max", num(car.x_max));
  c.set("env.v_min", num(car.v_min));
  c.set("env.v_max", num(car.v_max));
  c.set("env.progress_weight", num(car.progress_weight));
  c.set("env.violation_penalty", num(car.violation_penalty));
  c.set("env.stop_bonus", num(car.stop_bonus));
  c.set("env.stop_tolerance", num(car.stop_tolerance));
  c.set("env.step_cap", std::to_string(car.step_cap));
  c.set("env.ode_step", num(car.ode_step));

  CrossingEnvConfig x;
  c.set("crossing.width", std::to_string(x.width));
  c.set("crossing.height", std::to_string(x.height));
  c.set("crossing.road_row", std::to_string(x.road_row));
  c.set("crossing.speed_min", std::to_string(x.speed_min));
  c.set("crossing.speed_max", std::to_string(x.speed_max));
  c.set("crossing.seeds", std::to_string(x.seed_count));
  c.set("crossing.sprite", std::to_string(x.sprite));
  c.set("crossing.step_cap", std::to_string(x.step_cap));
  c.set("crossing.collision_radius", std::to_string(x.collision_radius));
  c.set("crossing.seed_reward", num(x.seed_reward));
  c.set("crossing.collision_penalty", num(x.collision_penalty));
  c.set("crossing.goal_reward", num(x.goal_reward));
  c.set("crossing.noise_sigma", num(x.noise_sigma));
  c.set("perception.quality", "0.85");

  TrainConfig t;
  c.set("train.episodes", std::to_string(t.episodes));
  c.set("train.alpha", num(t.alpha));
  c.set("train.gamma", num(t.gamma));
  c.set("train.eps_start", num(t.eps_start));
  c.set("train.eps_end", num(t.eps_end));
  c.set("train.eps_decay", std::to_string(t.eps_decay_episodes));
  c.set("train.penalty", num(t.penalty));
  c.set("train.shield", "true");
  c.set("train.margin", num(t.margin));

  c.set("check.depth", "20");
  c.set("check.step", num(1.0 / 64));
  c.set("check.budget", "50000000");
  c.set("check.dwell", "0.25*eps, 0.5*eps, eps");
  c.set("check.grid.x", "0:90:10");
  c.set("check.grid.v", "0:5:1");
  c.set("check.fixed.A", "1");
  c.set("check.fixed.b", "1");
  c.set("check.fixed.eps", "1");
  c.set("check.fixed.m", "100");
  c.set("check.fixed.a", "0");
  c.set("check.fixed.t", "0");

  c.set("simulate.episodes", "1");
  c.set("simulate.policy", "random");
  c.set("simulate.shield", "true");
  c.set("simulate.frames", "false");

  c.set("sweep.penalties", "0, -10, -100");

  c.set("adapt.phase1_episodes", "20");
  c.set("adapt.phase3_episodes", "1000");
  c.set("adapt.safety_factor", "0.9");
  c.set("adapt.threshold", "0.01");
  c.set("adapt.min_brake_samples", "200");
  c.set("adapt.check", "true");
  c.set("adapt.check_depth", "20");
  c.set("adapt.check_budget", "5000000");
  c.set("adapt.check_dwell", "eps");
  return c;
}

void write_file_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw std::runtime_error("write failed for " + path.string());
    }
  }
  fs::rename(tmp, path);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto one = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("bad seed '" + s + "' in seed list '" + text + "'");
    }
    return std::stoull(s);
  };
  std::vector<std::uint64_t> out;
  for (const std::string& item : split(text, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos) {
      out.push_back(one(item));
      continue;
    }
    std::uint64_t lo = one(item.substr(0, colon)), hi = one(item.substr(colon + 1));
    if (hi < lo) throw ConfigError("empty seed range '" + item + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

// ---------------------------------------------------------------- check

CheckSettings check_settings(const Config& config) {
  CheckSettings s;
  long long depth = config.integer("check.depth");
  if (depth < 0) throw ConfigError("check.depth must be >= 0");
  s.loop_depth = static_cast<std::size_t>(depth);
  s.flow.step = config.number("check.step");
  if (!(s.flow.step > 0)) throw ConfigError("check.step must be > 0");
  long long budget = config.integer("check.budget");
  if (budget < 0) throw ConfigError("check.budget must be >= 0");
  s.budget = static_cast<std::size_t>(budget);
  for (const std::string& d : split(config.string("check.dwell"), ',')) s.dwell_times.push_back(parse_term(d));
  for (const auto& [var, list] : config.with_prefix("check.samples.")) {
    for (const std::string& v : split(list, ',')) s.samples[var].push_back(parse_term(v));
  }
  return s;
}

std::vector<State> check_grid(const Config& config, const Formula& init, const State& overrides) {
  std::map<std::string, std::vector<double>, std::less<>> axes;
  for (const auto& [var, list] : config.with_prefix("check.grid.")) {
    try {
      axes[var] = parse_value_list(list);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("check.grid." + var + ": " + e.what());
    }
  }
  State fixed;
  for (const auto& [var, value] : config.with_prefix("check.fixed.")) fixed.set(var, parse_number(value, var));
  for (const auto& [var, value] : overrides.values()) fixed.set(var, value);
  std::vector<State> out;
  for (State& s : grid_states(axes, fixed)) {
    if (eval_formula(init, s)) out.push_back(std::move(s));
  }
  return out;
}

CheckRun run_check(const SafetyModel& model, const Config& config) {
  CheckRun r;
  r.settings = check_settings(config);
  r.initial = check_grid(config, model.init);
  r.verdict = bounded_check(model.program, model.safe, r.initial, r.settings);
  return r;
}

int cmd_check(const fs::path& model_path, const Config& config, const fs::path& out, std::ostream& report) {
  SafetyModel model = load_model(model_path);
  CheckRun r = run_check(model, config);
  const CheckStats& st = r.verdict.stats;
  report << "initial states: " << st.initial_states << "\nexpanded: " << st.expanded << "\npruned: " << st.pruned
         << "\nterminals: " << st.terminals << "\n";
  if (r.verdict.safe()) {
    report << "verdict: no counterexample found (depth " << r.settings.loop_depth << ")\n";
    return kExitOk;
  }
  const Counterexample& ce = *r.verdict.counterexample;
  ensure_dir(out);
  fs::path trace = out / "check_trace.csv";
  write_file_atomic(trace, [&](std::ostream& o) { write_trace_csv(o, ce.trace); });
  report << "verdict: counterexample\ninitial state #" << ce.initial_index << ": " << to_string(ce.initial)
         << "\nterminal: " << to_string(ce.terminal) << "\ndecisions:";
  for (const Decision& d : ce.decisions) report << ' ' << to_string(d);
  report << "\ntrace: " << trace.string() << "\n";
  return kExitCounterexample;
}

// ---------------------------------------------------------------- experiments

Experiment make_experiment(const Config& config) {
  Experiment e;
  if (env_kind(config) == "car") {
    CarEnvConfig cfg = CarEnvConfig::from_config(config);
    e.env = std::make_unique<CarEnv>(cfg);
    e.observer = std::make_unique<SymbolicObserver>();
    e.discretizer = std::make_unique<Discretizer>(Discretizer::car(cfg.m));
    e.shield = std::make_unique<GuardTable>(car_guard_table());
    return e;
  }
  CrossingEnvConfig cfg = CrossingEnvConfig::from_config(config);
  e.env = std::make_unique<CrossingEnv>(cfg);
  if (config.boolean("experiment.perception")) {
    PerceptionSetup p;
    if (config.has("perception.templates")) {
      fs::path manifest = config.string("perception.templates");
      Config m;
      m.merge_file(manifest);
      p = load_templates(m, manifest.parent_path());
    } else {
      p = crossing_perception(cfg, config.number("perception.quality"));
    }
    e.observer = std::make_unique<CrossingPerceiver>(cfg, std::move(p));
  } else {
    e.observer = std::make_unique<TruthObserver>();
  }
  e.discretizer = std::make_unique<Discretizer>(Discretizer::crossing(cfg));
  e.shield = std::make_unique<GuardTable>(crossing_guard_table(cfg));
  return e;
}

int cmd_simulate(const Config& config, const std::vector<std::uint64_t>& seeds, const fs::path& out,
                 std::ostream& report) {
  Experiment e = make_experiment(config);
  std::vector<std::string> actions = e.env->actions();
  std::string policy = config.string("simulate.policy");
  if (policy != "random" && std::find(actions.begin(), actions.end(), policy) == actions.end()) {
    throw ConfigError("simulate.policy must be random or one of the actions, got '" + policy + "'");
  }
  long long episodes = config.integer("simulate.episodes");
  if (episodes < 1) throw ConfigError("simulate.episodes must be >= 1");
  bool shielded = config.boolean("simulate.shield");
  bool frames = config.boolean("simulate.frames");
  ensure_dir(out);

  for (std::uint64_t seed : seeds) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    std::ostringstream csv;
    std::vector<std::string> vars;
    std::size_t total_violations = 0, total_interventions = 0;
    for (long long ep = 0; ep < episodes; ++ep) {
      e.observer->reset();
      Observation obs = e.env->reset(episode_seed(seed, static_cast<std::size_t>(ep)));
      if (vars.empty()) {
        State first = e.env->truth();
        for (const auto& [k, v] : first.values()) vars.push_back(k);
        csv << "episode,step";
        for (const auto& v : vars) csv << ',' << v;
        csv << ",observed,proposed,action,intervened,reward,done,violation\n";
      }
      for (std::size_t step = 0;; ++step) {
        if (frames && obs.frame) {
          fs::path f = out / ("frame_s" + std::to_string(seed) + "_e" + std::to_string(ep) + "_" +
                              std::to_string(step) + ".pgm");
          write_file_atomic(f, [&](std::ostream& o) { write_pgm(o, *obs.frame); });
        }
        Perceived seen = e.observer->observe(obs, *e.env);
        const State* known = std::get_if<State>(&seen);
        std::string proposed = policy == "random" ? actions[pick(rng)] : policy;
        std::string executed = proposed;
        bool intervened = false;
        if (shielded) {
          ShieldDecision d = known ? shield_action(*e.shield, *known, proposed)
                                   : ShieldDecision{e.shield->fallback(), proposed != e.shield->fallback()};
          executed = d.action;
          intervened = d.intervened;
        }
        State before = e.env->truth();
        StepOutcome o = e.env->step(executed);
        csv << ep << ',' << step;
        for (const auto& v : vars) csv << ',' << (before.has(v) ? num(before.get(v)) : "");
        csv << ',' << (known ? 1 : 0) << ',' << proposed << ',' << executed << ',' << (intervened ? 1 : 0) << ','
            << num(o.reward) << ',' << (o.done ? 1 : 0) << ',' << (o.violation ? 1 : 0) << '\n';
        total_violations += o.violation;
        total_interventions += intervened;
        obs = std::move(o.observation);
        if (o.done) break;
      }
    }
    fs::path file = out / ("simulate_seed" + std::to_string(seed) + ".csv");
    write_file_atomic(file, [&](std::ostream& o) { o << csv.str(); });
    report << "seed " << seed << ": " << episodes << " episodes, " << total_violations << " violations, "
           << total_interventions << " interventions -> " << file.string() << "\n";
  }
  return kExitOk;
}

std::vector<SeedRun> run_train(const Config& config, const std::vector<std::uint64_t>& seeds) {
  std::vector<SeedRun> runs;
  for (std::uint64_t seed : seeds) {
    Experiment e = make_experiment(config);
    runs.push_back({seed, train(e.setup(), train_config(config, seed))});
  }
  return runs;
}

void write_summary_csv(std::ostream& out, const std::vector<SeedRun>& runs) {
  out << "episode,reward_mean,violations_mean,interventions_mean,steps_mean,runs\n";
  if (runs.empty()) return;
  const std::size_t episodes = runs.front().result.log.size();
  const double n = static_cast<double>(runs.size());
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    double r = 0, v = 0, i = 0, s = 0;
    for (const SeedRun& run : runs) {
      const EpisodeStats& st = run.result.log.at(ep);
      r += st.reward;
      v += static_cast<double>(st.violations);
      i += static_cast<double>(st.interventions);
      s += static_cast<double>(st.steps);
    }
    out << ep << ',' << num(r / n) << ',' << num(v / n) << ',' << num(i / n) << ',' << num(s / n) << ','
        << runs.size() << '\n';
  }
}

namespace {

struct Totals {
  double reward = 0;
  std::size_t violations = 0;
  std::size_t interventions = 0;
  std::size_t episodes = 0;
};

Totals totals(const TrainingLog& log) {
  Totals t;
  for (const EpisodeStats& s : log) {
    t.reward += s.reward;
    t.violations += s.violations;
    t.interventions += s.interventions;
  }
  t.episodes = log.size();
  return t;
}

// Mean reward over the last tenth of the episodes (at least one).
double tail_mean(const TrainingLog& log) {
  if (log.empty()) return 0;
  std::size_t n = std::max<std::size_t>(1, log.size() / 10);
  double sum = 0;
  for (std::size_t i = log.size() - n; i < log.size(); ++i) sum += log[i].reward;
  return sum / static_cast<double>(n);
}

}  // namespace

int cmd_train(const Config& config, const std::vector<std::uint64_t>& seeds, const fs::path& out,
              std::ostream& report) {
  std::vector<SeedRun> runs = run_train(config, seeds);
  ensure_dir(out);
  Experiment e = make_experiment(config);
  std::size_t violations = 0;
  for (const SeedRun& run : runs) {
    std::string tag = "seed" + std::to_string(run.seed);
    write_file_atomic(out / ("train_" + tag + ".csv"), [&](std::ostream& o) { write_training_csv(o, run.result.log); });
    write_file_atomic(out / ("policy_" + tag + ".csv"),
                      [&](std::ostream& o) { write_policy_csv(o, run.result.q, *e.discretizer); });
    Totals t = totals(run.result.log);
    violations += t.violations;
    report << tag << ": episodes " << t.episodes << ", mean reward " << num(t.reward / static_cast<double>(t.episodes))
           << ", final-tenth mean reward " << num(tail_mean(run.result.log)) << ", violations " << t.violations
           << ", interventions " << t.interventions << "\n";
  }
  write_file_atomic(out / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, runs); });
  report << "total violations: " << violations << "\nsummary: " << (out / "summary.csv").string() << "\n";
  return kExitOk;
}

std::vector<SweepRun> run_sweep(const Config& config, const std::vector<double>& penalties,
                                const std::vector<std::uint64_t>& seeds) {
  if (penalties.empty()) throw ConfigError("penalty sweep needs at least one penalty value");
  std::vector<SweepRun> sweep;
  for (double p : penalties) {
    Config c = config;
    c.set("train.penalty", num(p));
    sweep.push_back({p, run_train(c, seeds)});
  }
  return sweep;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRun>& sweep) {
  out << "penalty,seed,episode,reward,violations,interventions,steps\n";
  for (const SweepRun& s : sweep) {
    for (const SeedRun& run : s.runs) {
      for (const EpisodeStats& e : run.result.log) {
        out << num(s.penalty) << ',' << run.seed << ',' << e.episode << ',' << num(e.reward) << ',' << e.violations
            << ',' << e.interventions << ',' << e.steps << '\n';
      }
    }
  }
}

int cmd_penalty_sweep(const Config& config, const std::vector<std::uint64_t>& seeds, const fs::path& out,
                      std::ostream& report) {
  std::vector<double> penalties = number_list(config.string("sweep.penalties"), "sweep.penalties");
  std::vector<SweepRun> sweep = run_sweep(config, penalties, seeds);
  ensure_dir(out);
  write_file_atomic(out / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, sweep); });

  std::ostringstream summary;
  summary << "penalty,runs,episodes,reward_mean,final_tenth_reward_mean,violations,interventions,delta_vs_first\n";
  double reference = 0;
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    double all = 0, tail = 0;
    std::size_t v = 0, i = 0, eps = 0;
    for (const SeedRun& run : sweep[k].runs) {
      Totals t = totals(run.result.log);
      all += t.reward;
      eps += t.episodes;
      v += t.violations;
      i += t.interventions;
      tail += tail_mean(run.result.log);
    }
    tail /= static_cast<double>(sweep[k].runs.size());
    if (k == 0) reference = tail;
    summary << num(sweep[k].penalty) << ',' << sweep[k].runs.size() << ',' << eps << ','
            << num(all / static_cast<double>(eps)) << ',' << num(tail) << ',' << v << ',' << i << ','
            << num(tail - reference) << '\n';
    report << "penalty " << num(sweep[k].penalty) << ": final-tenth mean reward " << num(tail);
    if (k > 0) report << " (" << (tail < reference ? "below" : "not below") << " penalty " << num(sweep[0].penalty) << " by " << num(reference - tail) << ")";
    report << ", interventions " << i << "\n";
  }
  write_file_atomic(out / "sweep_summary.csv", [&](std::ostream& o) { o << summary.str(); });
  report << "sweep: " << (out / "sweep.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- adaptation

namespace {

struct PhaseResult {
  std::size_t steps = 0;
  std::size_t violations = 0;
};

// Uniformly random proposals through the shield on the car env.
PhaseResult run_phase(CarEnv& env, const GuardTable& table, std::size_t episodes, std::uint64_t seed,
                      const std::function<void(const TransitionRecord&)>& sink) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xada9u};
  std::mt19937_64 rng(seq);
  std::vector<std::string> actions = env.actions();
  std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
  PhaseResult r;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    env.reset(episode_seed(seed, ep));
    for (bool done = false; !done;) {
      State before = env.state();
      std::string action = shield_action(table, before, actions[pick(rng)]).action;
      StepOutcome o = env.step(action);
      r.violations += o.violation;
      ++r.steps;
      done = o.done;
      if (sink) sink({before, action, env.state(), env.state().get("t")});
    }
  }
  return r;
}

}  // namespace

AdaptReport run_adapt(const Config& config, std::uint64_t seed) {
  CarEnvConfig cfg = CarEnvConfig::from_config(config);
  const double threshold = config.number("adapt.threshold");
  const double factor = config.number("adapt.safety_factor");
  const long long p1 = config.integer("adapt.phase1_episodes"), p3 = config.integer("adapt.phase3_episodes");
  const long long min_brake = config.integer("adapt.min_brake_samples");
  if (p1 < 1 || p3 < 0) throw ConfigError("adapt: need phase1_episodes >= 1 and phase3_episodes >= 0");
  if (min_brake < 1) throw ConfigError("adapt.min_brake_samples must be >= 1");
  if (!(threshold > 0)) throw ConfigError("adapt.threshold must be > 0");

  AdaptReport rep;
  rep.believed = cfg.params;
  rep.phase1_episodes = static_cast<std::size_t>(p1);
  GuardTable stale = car_guard_table();
  MismatchDetector detector(stale, car_plant(), FlowOptions{cfg.ode_step});

  CarEnv env(cfg);
  std::size_t step = 0;
  PhaseResult phase1 = run_phase(env, stale, rep.phase1_episodes, seed, [&](const TransitionRecord& r) {
    ++step;
    rep.transitions.push_back(r);
    if (r.elapsed > 0) (r.action == "brake" ? rep.brake_samples : rep.accel_samples) += 1;
    MismatchReport m = detector.check(std::span(&r, 1), cfg.params, threshold);
    for (const auto& [var, v] : m.residuals) rep.residuals[var] = std::max(rep.residuals[var], v);
    rep.max_residual = std::max(rep.max_residual, m.max_residual);
    if (m.flagged && !rep.first_flag_step) rep.first_flag_step = step;
  });
  rep.phase1_steps = phase1.steps;
  rep.phase1_violations = phase1.violations;
  rep.consistent = !rep.first_flag_step && rep.phase1_violations == 0;
  if (rep.consistent) return rep;

  if (rep.brake_samples < static_cast<std::size_t>(min_brake)) {
    throw ShieldError(ShieldError::Kind::InsufficientData, "brake",
                      "phase 1 collected " + std::to_string(rep.brake_samples) + " braking samples, need " +
                          std::to_string(min_brake));
  }
  rep.estimated = estimate_params(rep.transitions);
  rep.table = resynthesize_guards(stale, cfg.params, *rep.estimated, factor);
  rep.guard_params = ModelParams{rep.estimated->A, factor * rep.estimated->b, rep.estimated->eps};

  CarEnvConfig fresh = cfg;
  fresh.params = *rep.guard_params;  // initial states are drawn under the corrected model
  fresh.validate();
  CarEnv env3(fresh);
  rep.phase3_episodes = static_cast<std::size_t>(p3);
  rep.phase3_violations = run_phase(env3, *rep.table, rep.phase3_episodes, seed + 1, {}).violations;

  if (config.boolean("adapt.check")) {
    Config c = config;
    c.set("check.depth", config.string("adapt.check_depth"));
    c.set("check.budget", config.string("adapt.check_budget"));
    c.set("check.dwell", config.string("adapt.check_dwell"));
    CheckSettings settings = check_settings(c);
    Program model = loop(seq(controller_program(*rep.table), car_plant()));
    // The plant runs on parameters rounded to multiples of 2^-12, weaker brakes,
    // stronger acceleration and a shorter cycle, so that states reached along
    // different paths stay exactly representable and can be merged.
    const double q = 4096;
    State params;
    ModelParams rounded{std::ceil(rep.estimated->A * q) / q, std::floor(rep.estimated->b * q) / q,
                        std::floor(std::min(rep.estimated->eps, rep.guard_params->eps) * q) / q};
    rounded.store(params);
    params.set("m", cfg.m);
    std::vector<State> grid = check_grid(c, parse_formula("v^2 <= 2*b*(m-x) & v >= 0"), params);
    try {
      Verdict v = bounded_check(model, parse_formula("x <= m"), grid, settings);
      rep.check_safe = v.safe();
      rep.check_note = std::to_string(grid.size()) + " initial states, depth " + std::to_string(settings.loop_depth) +
                       ", " + std::to_string(v.stats.expanded) + " expanded";
    } catch (const BudgetExceeded& e) {
      rep.check_note = e.what();
    }
  }
  return rep;
}

void print_adapt_report(std::ostream& out, const AdaptReport& r) {
  out << "believed: A=" << num(r.believed.A) << " b=" << num(r.believed.b) << " eps=" << num(r.believed.eps) << "\n";
  out << "phase 1: " << r.phase1_episodes << " episodes, " << r.phase1_steps << " steps, " << r.phase1_violations
      << " violations, " << r.brake_samples << " braking and " << r.accel_samples << " accelerating samples\n";
  out << "max residuals:";
  for (const auto& [var, v] : r.residuals) out << ' ' << var << '=' << num(v);
  out << "\n";
  if (r.first_flag_step) {
    out << "mismatch flagged at step " << *r.first_flag_step << "\n";
  } else {
    out << "no mismatch flagged\n";
  }
  if (r.consistent) {
    out << "model consistent\n";
    return;
  }
  out << "estimated: A=" << num(r.estimated->A) << " b=" << num(r.estimated->b) << " eps=" << num(r.estimated->eps)
      << "\n";
  out << "guard parameters: A=" << num(r.guard_params->A) << " b=" << num(r.guard_params->b)
      << " eps=" << num(r.guard_params->eps) << "\n";
  out << "phase 3: " << r.phase3_episodes << " episodes, " << r.phase3_violations << " violations\n";
  if (r.check_safe) {
    out << "bounded check with learned parameters: " << (*r.check_safe ? "no counterexample" : "counterexample")
        << " (" << r.check_note << ")\n";
  } else if (!r.check_note.empty()) {
    out << "bounded check with learned parameters: inconclusive (" << r.check_note << ")\n";
  }
}

int cmd_adapt(const Config& config, const std::vector<std::uint64_t>& seeds, const fs::path& out,
              std::ostream& report) {
  ensure_dir(out);
  std::ostringstream summary;
  summary << "seed,phase1_steps,phase1_violations,first_flag_step,max_residual_v,brake_samples,b_hat,A_hat,eps_hat,"
             "phase3_violations,check\n";
  for (std::uint64_t seed : seeds) {
    AdaptReport r = run_adapt(config, seed);
    std::string tag = "seed" + std::to_string(seed);
    report << "[" << tag << "]\n";
    print_adapt_report(report, r);
    write_file_atomic(out / ("adapt_transitions_" + tag + ".csv"),
                      [&](std::ostream& o) { write_transitions_csv(o, r.transitions); });
    if (r.table) {
      write_file_atomic(out / ("adapt_guards_" + tag + ".hp"), [&](std::ostream& o) { o << print_guard_table(*r.table); });
    }
    auto opt = [](const auto& o, auto f) { return o ? num(f(*o)) : std::string(); };
    summary << seed << ',' << r.phase1_steps << ',' << r.phase1_violations << ','
            << (r.first_flag_step ? std::to_string(*r.first_flag_step) : "") << ','
            << (r.residuals.count("v") ? num(r.residuals.at("v")) : "") << ',' << r.brake_samples << ','
            << opt(r.estimated, [](const ModelParams& p) { return p.b; }) << ','
            << opt(r.estimated, [](const ModelParams& p) { return p.A; }) << ','
            << opt(r.estimated, [](const ModelParams& p) { return p.eps; }) << ','
            << (r.consistent ? "" : std::to_string(r.phase3_violations)) << ','
            << (r.check_safe ? (*r.check_safe ? "safe" : "counterexample") : (r.consistent ? "" : "inconclusive"))
            << '\n';
  }
  write_file_atomic(out / "adapt_summary.csv", [&](std::ostream& o) { o << summary.str(); });
  return kExitOk;
}

}  // namespace hpshield::cli
