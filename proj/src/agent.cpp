#include "hpshield/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "hpshield/crossing_env.hpp"
#include "hpshield/printer.hpp"

namespace hpshield {

Discretizer::Discretizer(std::vector<BinSpec> specs) : specs_(std::move(specs)) {
  for (const BinSpec& b : specs_) {
    if (!(b.lower < b.upper) || !std::isfinite(b.lower) || !std::isfinite(b.upper)) {
      throw std::invalid_argument("bins for '" + b.var + "' need finite lower < upper");
    }
    if (b.bins == 0) throw std::invalid_argument("bins for '" + b.var + "' need a positive count");
    if (size_ > (std::size_t{1} << 40) / b.bins) throw std::invalid_argument("discretization too large");
    size_ *= b.bins;
  }
}

Discretizer Discretizer::car(double m) { return Discretizer({{"x", 0, m, 50}, {"v", 0, 12, 25}}); }

Discretizer Discretizer::crossing(const CrossingEnvConfig& cfg) {
  return Discretizer({{"agent_row", -0.5, cfg.height - 0.5, static_cast<std::size_t>(cfg.height)},
                      {"car_col", -0.5, cfg.width - 0.5, static_cast<std::size_t>(cfg.width)},
                      {"car_speed", cfg.speed_min - 0.5, cfg.speed_max + 0.5,
                       static_cast<std::size_t>(cfg.speed_max - cfg.speed_min + 1)}});
}

std::size_t Discretizer::index(const State& s) const {
  std::size_t idx = 0;
  for (const BinSpec& b : specs_) {
    double v = s.get(b.var);
    double pos = (v - b.lower) / (b.upper - b.lower) * static_cast<double>(b.bins);
    std::size_t bin = pos <= 0 ? 0 : std::min(b.bins - 1, static_cast<std::size_t>(pos));
    idx = idx * b.bins + bin;
  }
  return idx;
}

std::vector<std::size_t> Discretizer::bins(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("not a regular state index");
  std::vector<std::size_t> out(specs_.size());
  for (std::size_t i = specs_.size(); i-- > 0;) {
    out[i] = index % specs_[i].bins;
    index /= specs_[i].bins;
  }
  return out;
}

QTable::QTable(std::size_t states, std::vector<std::string> actions) : states_(states), actions_(std::move(actions)) {
  if (actions_.empty()) throw std::invalid_argument("Q table needs at least one action");
  std::sort(actions_.begin(), actions_.end());
  if (std::adjacent_find(actions_.begin(), actions_.end()) != actions_.end()) {
    throw std::invalid_argument("duplicate action id");
  }
  values_.assign(states_ * actions_.size(), 0.0);
}

std::size_t QTable::action_index(const std::string& action) const {
  auto it = std::lower_bound(actions_.begin(), actions_.end(), action);
  if (it == actions_.end() || *it != action) throw std::invalid_argument("unknown action '" + action + "'");
  return static_cast<std::size_t>(it - actions_.begin());
}

double QTable::max(std::size_t s) const { return get(s, argmax(s)); }

std::size_t QTable::argmax(std::size_t s) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < actions_.size(); ++a) {
    if (get(s, a) > get(s, best)) best = a;
  }
  return best;
}

std::size_t select_action(const QTable& q, std::size_t s, double eps, std::mt19937_64& rng) {
  if (eps > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps) {
    return std::uniform_int_distribution<std::size_t>(0, q.actions().size() - 1)(rng);
  }
  return q.argmax(s);
}

void q_update(QTable& q, std::size_t s, std::size_t a, double reward, std::optional<std::size_t> next, double alpha,
              double gamma) {
  double target = reward + (next ? gamma * q.max(*next) : 0.0);
  q.set(s, a, (1 - alpha) * q.get(s, a) + alpha * target);
}

TrainConfig TrainConfig::from_config(const Config& c) {
  TrainConfig t;
  auto count = [&](const char* key, std::size_t fallback) {
    long long v = c.integer(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
    return static_cast<std::size_t>(v);
  };
  t.episodes = count("train.episodes", t.episodes);
  t.alpha = c.number("train.alpha", t.alpha);
  t.gamma = c.number("train.gamma", t.gamma);
  t.eps_start = c.number("train.eps_start", t.eps_start);
  t.eps_end = c.number("train.eps_end", t.eps_end);
  t.eps_decay_episodes = count("train.eps_decay", t.eps_decay_episodes);
  t.penalty = c.number("train.penalty", t.penalty);
  t.seed = static_cast<std::uint64_t>(count("train.seed", t.seed));
  t.shield = c.boolean("train.shield", t.shield);
  t.margin = c.number("train.margin", t.margin);
  t.validate();
  return t;
}

void TrainConfig::validate() const {
  if (!(alpha > 0 && alpha <= 1)) throw ConfigError("train.alpha must be in (0, 1]");
  if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("train.gamma must be in [0, 1]");
  if (!(eps_start >= 0 && eps_start <= 1) || !(eps_end >= 0 && eps_end <= 1)) {
    throw ConfigError("train.eps_start and train.eps_end must be in [0, 1]");
  }
  if (!(penalty <= 0) || !std::isfinite(penalty)) throw ConfigError("train.penalty must be <= 0");
  if (!std::isfinite(margin)) throw ConfigError("train.margin must be finite");
}

double TrainConfig::epsilon(std::size_t episode) const {
  if (eps_decay_episodes == 0 || episode >= eps_decay_episodes) return eps_end;
  double f = static_cast<double>(episode) / static_cast<double>(eps_decay_episodes);
  return eps_start + (eps_end - eps_start) * f;
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::size_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(std::uint64_t{episode} >> 32)};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

void write_training_csv(std::ostream& out, const TrainingLog& log) {
  out << "episode,reward,violations,interventions,steps\n";
  for (const EpisodeStats& e : log) {
    out << e.episode << ',' << format_number(e.reward) << ',' << e.violations << ',' << e.interventions << ','
        << e.steps << '\n';
  }
}

Perceived SymbolicObserver::observe(const Observation& obs, const Environment&) {
  if (obs.state) return *obs.state;
  return PerceptionFailure{obs.failure.empty() ? "state" : obs.failure};
}

Perceived TruthObserver::observe(const Observation&, const Environment& env) { return env.truth(); }

CrossingPerceiver::CrossingPerceiver(const CrossingEnvConfig& cfg, PerceptionSetup setup)
    : width_(cfg.width), setup_(std::move(setup)) {}

Perceived CrossingPerceiver::observe(const Observation& obs, const Environment&) {
  if (!obs.frame) return PerceptionFailure{"frame"};
  Perceived p = extract_symbols(*obs.frame, setup_.templates, setup_.map);
  if (std::holds_alternative<PerceptionFailure>(p)) {
    last_car_col_.reset();
    return p;
  }
  State s = std::get<State>(p);
  for (const char* var : {"agent_row", "agent_col", "car_col"}) {
    if (!s.has(var)) return PerceptionFailure{var};
    s.set(var, std::round(s.get(var)));
  }
  int col = static_cast<int>(s.get("car_col"));
  std::optional<int> last = last_car_col_;
  last_car_col_ = col;
  if (!last) return PerceptionFailure{"car_speed"};
  int speed = ((*last - col) % width_ + width_) % width_;
  s.set("car_speed", speed);
  return s;
}

namespace {

std::optional<State> known(const Perceived& p) {
  if (const State* s = std::get_if<State>(&p)) return *s;
  return std::nullopt;
}

TrainingLog run_episodes(const AgentSetup& setup, QTable& q, const TrainConfig& cfg, bool learn,
                         const StepHook& hook) {
  cfg.validate();
  if (cfg.shield && !setup.shield) throw std::invalid_argument("shield enabled without a guard table");
  std::vector<std::string> env_actions = setup.env.actions();
  std::sort(env_actions.begin(), env_actions.end());
  if (env_actions != q.actions()) throw std::invalid_argument("Q table actions do not match the environment");
  if (q.states() != setup.discretizer.size() + 1) throw std::invalid_argument("Q table size does not match the discretizer");

  std::seed_seq agent_seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 0xa9e17u};
  std::mt19937_64 rng(agent_seq);
  auto index_of = [&](const std::optional<State>& s) {
    return s ? setup.discretizer.index(*s) : setup.discretizer.unknown();
  };

  TrainingLog log;
  log.reserve(cfg.episodes);
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    auto t0 = std::chrono::steady_clock::now();
    EpisodeStats stats;
    stats.episode = ep;
    setup.observer.reset();
    Observation obs = setup.env.reset(episode_seed(cfg.seed, ep));
    std::optional<State> state = known(setup.observer.observe(obs, setup.env));
    std::size_t s = index_of(state);
    double eps = learn ? cfg.epsilon(ep) : 0.0;
    for (bool done = false; !done;) {
      std::size_t proposed = select_action(q, s, eps, rng);
      const std::string& proposed_id = q.actions()[proposed];
      std::string executed_id = proposed_id;
      bool intervened = false;
      if (cfg.shield) {
        if (state) {
          ShieldDecision d = shield_action(*setup.shield, *state, proposed_id, cfg.margin);
          executed_id = d.action;
          intervened = d.intervened;
        } else {
          executed_id = setup.shield->fallback();
          intervened = executed_id != proposed_id;
        }
      }
      State before = hook ? setup.env.truth() : State{};
      StepOutcome out = setup.env.step(executed_id);
      std::optional<State> next_state = known(setup.observer.observe(out.observation, setup.env));
      std::size_t next = index_of(next_state);
      std::size_t executed = q.action_index(executed_id);
      if (learn) {
        q_update(q, s, executed, out.reward, out.done ? std::nullopt : std::optional(next), cfg.alpha, cfg.gamma);
        if (cfg.penalty != 0 && intervened) {
          q.set(s, proposed, (1 - cfg.alpha) * q.get(s, proposed) + cfg.alpha * cfg.penalty);
        }
      }
      if (hook) {
        hook(StepRecord{ep, stats.steps, std::move(before), state, proposed_id, executed_id, intervened, out.reward,
                        out.done, out.violation, setup.env.truth()});
      }
      stats.reward += out.reward;
      stats.violations += out.violation;
      stats.interventions += intervened;
      ++stats.steps;
      done = out.done;
      state = std::move(next_state);
      s = next;
    }
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(stats);
  }
  return log;
}

}  // namespace

TrainResult train(const AgentSetup& setup, const TrainConfig& cfg, std::optional<QTable> initial,
                  const StepHook& hook) {
  QTable q = initial ? std::move(*initial) : QTable(setup.discretizer.size() + 1, setup.env.actions());
  TrainingLog log = run_episodes(setup, q, cfg, true, hook);
  return {std::move(q), std::move(log)};
}

TrainingLog evaluate(const AgentSetup& setup, const QTable& q, const TrainConfig& cfg, const StepHook& hook) {
  QTable copy = q;
  return run_episodes(setup, copy, cfg, false, hook);
}

void write_policy_csv(std::ostream& out, const QTable& q, const Discretizer& d) {
  out << "state";
  for (const BinSpec& b : d.specs()) out << ',' << b.var << "_bin";
  out << ",action";
  for (const auto& a : q.actions()) out << ",q_" << a;
  out << '\n';
  for (std::size_t s = 0; s < q.states(); ++s) {
    bool unknown = s == d.unknown();
    bool visited = false;
    for (std::size_t a = 0; a < q.actions().size(); ++a) visited = visited || q.get(s, a) != 0;
    if (!visited && !unknown) continue;
    out << s;
    if (unknown) {
      for (std::size_t i = 0; i < d.specs().size(); ++i) out << ",";
    } else {
      for (std::size_t b : d.bins(s)) out << ',' << b;
    }
    out << ',' << q.actions()[q.argmax(s)];
    for (std::size_t a = 0; a < q.actions().size(); ++a) out << ',' << format_number(q.get(s, a));
    out << '\n';
  }
}

}  // namespace hpshield
