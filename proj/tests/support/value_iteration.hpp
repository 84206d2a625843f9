#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "hpshield/agent.hpp"
#include "hpshield/car_env.hpp"

namespace oracle {

// Abstract MDP of the shielded car env over the agent's discretization.
// Every bin is represented by uniform samples that satisfy the braking
// invariant v^2 <= 2b(m-x); each (sample, proposed action) pair is pushed
// through the shield and one real env step, and the outcomes become the
// empirical transition distribution. Finite-horizon undiscounted value
// iteration then gives the optimal expected episode reward per bin.
//
// The progress part of the reward (dx) telescopes over an episode. In the
// abstract chain it is replaced by the change of bin centre (the real final
// position on the last step), which keeps the telescoping: otherwise a bin
// that may loop onto itself would pay its within-bin progress forever.
// Velocity changes by at most A*eps or b*eps per step, a fraction of a bin,
// so escape probabilities are small and need dense sampling: with only a few
// samples per bin a slow bin can look absorbing.
class CarValueIteration {
 public:
  CarValueIteration(const hpshield::CarEnvConfig& cfg, std::size_t samples_per_bin = 64, std::uint64_t seed = 1)
      : cfg_(cfg), disc_(hpshield::Discretizer::car(cfg.m)) {
    using namespace hpshield;
    GuardTable table = car_guard_table();
    CarEnv env(cfg);
    std::mt19937_64 rng(seed);
    const std::size_t n = disc_.size();
    const std::vector<std::string> actions = env.actions();
    model_.assign(n, std::vector<Outcomes>(actions.size()));
    reachable_.assign(n, false);
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<std::size_t> bins = disc_.bins(s);
      const BinSpec& bx = disc_.specs()[0];
      const BinSpec& bv = disc_.specs()[1];
      double wx = (bx.upper - bx.lower) / static_cast<double>(bx.bins);
      double wv = (bv.upper - bv.lower) / static_cast<double>(bv.bins);
      std::uniform_real_distribution<double> ux(bx.lower + wx * static_cast<double>(bins[0]),
                                                bx.lower + wx * static_cast<double>(bins[0] + 1));
      std::uniform_real_distribution<double> uv(bv.lower + wv * static_cast<double>(bins[1]),
                                                bv.lower + wv * static_cast<double>(bins[1] + 1));
      std::size_t taken = 0;
      for (std::size_t k = 0; k < samples_per_bin * 8 && taken < samples_per_bin; ++k) {
        double x = ux(rng), v = uv(rng);
        if (v * v > 2 * cfg.params.b * (cfg.m - x)) continue;
        ++taken;
        for (std::size_t a = 0; a < actions.size(); ++a) {
          env.set_state(x, v);
          std::string executed = shield_action(table, env.state(), actions[a]).action;
          StepOutcome out = env.step(executed);
          double x_after = out.observation.state->get("x");
          std::size_t next = out.done ? kTerminal : disc_.index(*out.observation.state);
          double to = out.done ? x_after : centre_x(next);
          Outcomes& o = model_[s][a];
          o.reward_sum += out.reward - cfg.progress_weight * (x_after - x) + cfg.progress_weight * (to - centre_x(s));
          o.count += 1;
          o.next[next] += 1;
        }
      }
      reachable_[s] = taken > 0;
    }

    value_.assign(n, 0.0);
    std::vector<double> fresh(n);
    for (std::size_t h = 0; h < cfg.step_cap; ++h) {
      for (std::size_t s = 0; s < n; ++s) {
        if (!reachable_[s]) continue;
        double best = -1e300;
        for (const Outcomes& o : model_[s]) {
          double q = o.reward_sum / o.count;
          for (const auto& [next, c] : o.next) {
            if (next != kTerminal) q += c / o.count * value_[next];
          }
          best = std::max(best, q);
        }
        fresh[s] = best;
      }
      for (std::size_t s = 0; s < n; ++s) {
        if (reachable_[s]) value_[s] = fresh[s];
      }
    }
  }

  // Optimal value of the bin, shifted from its centre to the state's position.
  double value(const hpshield::State& s) const {
    std::size_t i = disc_.index(s);
    return value_[i] + cfg_.progress_weight * (centre_x(i) - s.get("x"));
  }

  // Mean optimal value over the initial states the agent would see.
  double mean_initial_value(std::uint64_t run_seed, std::size_t episodes) const {
    hpshield::CarEnv env(cfg_);
    double sum = 0;
    for (std::size_t e = 0; e < episodes; ++e) sum += value(*env.reset(hpshield::episode_seed(run_seed, e)).state);
    return sum / static_cast<double>(episodes);
  }

 private:
  static constexpr std::size_t kTerminal = static_cast<std::size_t>(-1);
  struct Outcomes {
    double reward_sum = 0;
    double count = 0;
    std::map<std::size_t, double> next;
  };

  double centre_x(std::size_t index) const {
    const hpshield::BinSpec& bx = disc_.specs()[0];
    double w = (bx.upper - bx.lower) / static_cast<double>(bx.bins);
    return bx.lower + w * (static_cast<double>(disc_.bins(index)[0]) + 0.5);
  }

  hpshield::CarEnvConfig cfg_;
  hpshield::Discretizer disc_;
  std::vector<std::vector<Outcomes>> model_;
  std::vector<bool> reachable_;
  std::vector<double> value_;
};

}  // namespace oracle
