#include "hpshield/check.hpp"

#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <algorithm>
#include <optional>
#include <unordered_map>

#include "hpshield/eval.hpp"
#include "machine.hpp"

namespace hpshield {

using detail::CompiledProgram;

namespace {

struct Frame {
  int node;
  std::uint32_t pos;  // next item of a sequence, or iterations used by a loop
};

struct KeyHash {
  std::size_t operator()(const std::vector<std::uint64_t>& key) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ key.size();
    for (std::uint64_t k : key) {
      k *= 0xbf58476d1ce4e5b9ULL;
      k ^= k >> 31;
      h = (h ^ k) * 0x94d049bb133111ebULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

// Decision indices along a path: branch index, sample index or dwell index.
using Path = std::vector<std::uint16_t>;

// Nondeterminism resolved by indices into the per-start sample and dwell lists.
struct Abstraction {
  std::vector<double> dwell;
  std::vector<std::vector<double>> samples;  // by slot, empty when none configured
  bool operator==(const Abstraction&) const = default;
};

struct Item {
  std::vector<Frame> frames;
  std::vector<double> slots;
  std::uint32_t start;
  Path path;
};

struct Found {
  std::uint32_t start;
  Path path;
};

class Explorer {
 public:
  Explorer(const CompiledProgram& prog, const detail::CompiledFormula& post, detail::Layout& layout,
           const CheckSettings& settings, CheckStats& stats)
      : prog_(prog), post_(post), layout_(layout), settings_(settings), stats_(stats) {}

  std::vector<Abstraction> abstractions;
  std::vector<std::uint32_t> abstraction_of;  // by start index

  std::size_t distinct() const { return visited_.size(); }

  // Level k holds configurations that have used k loop iterations in total.
  // Processing levels in order means no configuration is reached later with
  // fewer iterations used, so each one is expanded at most once.
  std::optional<Found> run(std::vector<Item> level) {
    while (!level.empty()) {
      next_.clear();
      for (Item& item : level) {
        current_ = &item;
        path_ = std::move(item.path);
        if (explore(std::move(item.frames), std::move(item.slots))) return Found{item.start, path_};
      }
      level.swap(next_);
    }
    return std::nullopt;
  }

 private:
  bool explore(std::vector<Frame> frames, std::vector<double> slots) {
    while (true) {
      if (frames.empty()) {
        ++stats_.terminals;
        return !post_.eval(slots, layout_);
      }
      Frame& top = frames.back();
      const auto& node = prog_.nodes[static_cast<std::size_t>(top.node)];
      switch (node.kind) {
        case CompiledProgram::Kind::Assign:
          slots[static_cast<std::size_t>(node.var)] =
              prog_.terms[static_cast<std::size_t>(node.term)].eval(slots, layout_);
          frames.pop_back();
          continue;
        case CompiledProgram::Kind::Test:
          if (!prog_.formulas[static_cast<std::size_t>(node.formula)].eval(slots, layout_)) return false;
          frames.pop_back();
          continue;
        case CompiledProgram::Kind::Seq:
          if (top.pos == node.children.size()) {
            frames.pop_back();
          } else {
            int child = node.children[top.pos++];
            frames.push_back({child, 0});
          }
          continue;
        default: break;
      }

      // Branching point.
      if (covered(frames, slots)) {
        ++stats_.pruned;
        return false;
      }
      if (settings_.budget > 0 && stats_.expanded >= settings_.budget) throw BudgetExceeded(stats_.expanded);
      ++stats_.expanded;
      const Abstraction& abs = abstractions[abstraction_of[current_->start]];

      switch (node.kind) {
        case CompiledProgram::Kind::Choice:
          for (std::size_t i = 0; i < node.children.size(); ++i) {
            auto next = frames;
            next.back() = {node.children[i], 0};
            if (descend(i, std::move(next), slots)) return true;
          }
          return false;
        case CompiledProgram::Kind::Loop: {
          auto stop = frames;
          stop.pop_back();
          if (descend(0, std::move(stop), slots)) return true;
          if (top.pos >= settings_.loop_depth) return false;
          top.pos++;
          frames.push_back({node.children.front(), 0});
          path_.push_back(1);
          next_.push_back(Item{std::move(frames), std::move(slots), current_->start, path_});
          path_.pop_back();
          return false;
        }
        case CompiledProgram::Kind::AssignAny: {
          auto var = static_cast<std::size_t>(node.var);
          if (var >= abs.samples.size() || abs.samples[var].empty()) {
            throw std::invalid_argument("no sample values configured for '" + layout_.name(node.var) + "'");
          }
          frames.pop_back();
          for (std::size_t i = 0; i < abs.samples[var].size(); ++i) {
            auto next = slots;
            next[var] = abs.samples[var][i];
            if (descend(i, frames, std::move(next))) return true;
          }
          return false;
        }
        case CompiledProgram::Kind::Ode: {
          const auto& ode = prog_.odes[static_cast<std::size_t>(node.ode)];
          if (!ode.domain_holds(slots, layout_)) return false;
          frames.pop_back();
          detail::FlowSettings fs{settings_.flow.step, settings_.flow.event_tolerance, 0};
          for (std::size_t i = 0; i < abs.dwell.size(); ++i) {
            auto next = slots;
            ode.flow(next, layout_, abs.dwell[i], fs);
            if (descend(i, frames, std::move(next))) return true;
          }
          return false;
        }
        default: return false;
      }
    }
  }

  bool descend(std::size_t index, std::vector<Frame> frames, std::vector<double> slots) {
    path_.push_back(static_cast<std::uint16_t>(index));
    if (explore(std::move(frames), std::move(slots))) return true;
    path_.pop_back();
    return false;
  }

  // Records the configuration; true when an earlier visit with no more loop
  // iterations used already covers it.
  bool covered(const std::vector<Frame>& frames, const std::vector<double>& slots) {
    std::vector<std::uint64_t> key;
    std::vector<std::uint32_t> counts;
    key.reserve(frames.size() + slots.size() + 2);
    key.push_back(abstraction_of[current_->start]);
    for (const Frame& f : frames) {
      const auto kind = prog_.nodes[static_cast<std::size_t>(f.node)].kind;
      if (kind == CompiledProgram::Kind::Loop) {
        key.push_back(static_cast<std::uint64_t>(f.node) << 1U);
        counts.push_back(f.pos);
      } else {
        key.push_back((static_cast<std::uint64_t>(f.node) << 33U) | (std::uint64_t{f.pos} << 1U) | 1U);
      }
    }
    key.push_back(~std::uint64_t{0});
    for (double v : slots) {
      // Normalise -0.0 so that equal states get equal keys.
      key.push_back(std::bit_cast<std::uint64_t>(v == 0 ? 0.0 : v));
    }
    auto& seen = visited_[std::move(key)];
    for (const auto& c : seen) {
      bool dominated = true;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] > counts[i]) {
          dominated = false;
          break;
        }
      }
      if (dominated) return true;
    }
    std::erase_if(seen, [&](const std::vector<std::uint32_t>& c) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (counts[i] > c[i]) return false;
      }
      return true;
    });
    seen.push_back(std::move(counts));
    return false;
  }

  const CompiledProgram& prog_;
  const detail::CompiledFormula& post_;
  detail::Layout& layout_;
  const CheckSettings& settings_;
  CheckStats& stats_;
  const Item* current_ = nullptr;
  Path path_;
  std::vector<Item> next_;
  std::unordered_map<std::vector<std::uint64_t>, std::vector<std::vector<std::uint32_t>>, KeyHash> visited_;
};

// Answers every question from a path of indices and records the decisions.
class IndexResolver : public Resolver {
 public:
  IndexResolver(const Path& path, const Abstraction& abs, const detail::Layout& layout)
      : path_(path), abs_(abs), layout_(layout) {}
  std::size_t choose(std::size_t, const ChoiceContext&) override { return next(); }
  double sample_any(const std::string& var, const State&) override {
    return abs_.samples.at(static_cast<std::size_t>(layout_.find(var))).at(next());
  }
  double duration(const Program&, const State&) override { return abs_.dwell.at(next()); }
  std::size_t consumed() const { return pos_; }

 private:
  std::size_t next() {
    if (pos_ >= path_.size()) throw std::logic_error("counterexample path exhausted during replay");
    return path_[pos_++];
  }
  const Path& path_;
  const Abstraction& abs_;
  const detail::Layout& layout_;
  std::size_t pos_ = 0;
};

}  // namespace

Verdict bounded_check(const Program& program, const Formula& post, const std::vector<State>& initial_states,
                      const CheckSettings& settings) {
  if (!(settings.flow.step > 0)) throw std::invalid_argument("integration step must be positive");
  if (settings.loop_depth > 65535) throw std::invalid_argument("loop depth too large");
  detail::Layout layout;
  CompiledProgram compiled(program, layout);
  detail::CompiledFormula compiled_post(post, layout);
  for (const auto& [name, values] : settings.samples) layout.slot(name);
  for (const State& s : initial_states) layout.load(s);

  Verdict verdict;
  verdict.stats.initial_states = initial_states.size();
  Explorer explorer(compiled, compiled_post, layout, settings, verdict.stats);

  std::vector<Item> level;
  for (std::size_t index = 0; index < initial_states.size(); ++index) {
    const State& init = initial_states[index];
    Abstraction abs;
    for (const Term& t : settings.dwell_times) {
      double d = eval_term(t, init);
      if (!(d >= 0)) throw std::invalid_argument("dwell times must be non-negative");
      abs.dwell.push_back(d);
    }
    if (abs.dwell.size() > 65535) throw std::invalid_argument("too many dwell times");
    abs.samples.assign(layout.size(), {});
    for (const auto& [name, terms] : settings.samples) {
      auto& out = abs.samples[static_cast<std::size_t>(layout.find(name))];
      for (const Term& t : terms) out.push_back(eval_term(t, init));
      if (out.size() > 65535) throw std::invalid_argument("too many sample values for '" + name + "'");
    }
    auto it = std::find(explorer.abstractions.begin(), explorer.abstractions.end(), abs);
    explorer.abstraction_of.push_back(static_cast<std::uint32_t>(it - explorer.abstractions.begin()));
    if (it == explorer.abstractions.end()) explorer.abstractions.push_back(std::move(abs));
    level.push_back(Item{{{compiled.root, 0}}, layout.load(init), static_cast<std::uint32_t>(index), {}});
  }

  auto found = explorer.run(std::move(level));
  verdict.stats.distinct = explorer.distinct();
  if (!found) return verdict;

  Counterexample ce;
  ce.initial_index = found->start;
  ce.initial = initial_states[found->start];
  IndexResolver resolver(found->path, explorer.abstractions[explorer.abstraction_of[found->start]], layout);
  RunOptions ro;
  ro.flow = settings.flow;
  RunResult r = run(program, ce.initial, resolver, ro);
  if (!r.completed() || resolver.consumed() != found->path.size() || eval_formula(post, r.state)) {
    throw std::logic_error("counterexample replay diverged from the exploration");
  }
  ce.decisions = std::move(r.decisions);
  ce.trace = std::move(r.trace);
  ce.terminal = std::move(r.state);
  verdict.counterexample = std::move(ce);
  return verdict;
}

std::vector<State> grid_states(const std::map<std::string, std::vector<double>, std::less<>>& axes,
                               const State& fixed) {
  std::vector<State> out{fixed};
  for (const auto& [name, values] : axes) {
    std::vector<State> next;
    next.reserve(out.size() * values.size());
    for (const State& s : out) {
      for (double v : values) {
        State t = s;
        t.set(name, v);
        next.push_back(std::move(t));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<double> parse_value_list(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number: '" + s + "' in '" + text + "'");
    }
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    auto first = text.find(':');
    auto second = text.find(':', first + 1);
    if (second == std::string::npos || text.find(':', second + 1) != std::string::npos) {
      throw std::invalid_argument("range must be start:stop:step, got '" + text + "'");
    }
    double start = number(text.substr(0, first));
    double stop = number(text.substr(first + 1, second - first - 1));
    double step = number(text.substr(second + 1));
    if (!(step > 0) || stop < start) throw std::invalid_argument("empty or invalid range '" + text + "'");
    for (std::size_t i = 0;; ++i) {
      double v = start + static_cast<double>(i) * step;
      if (v > stop + step * 1e-9) break;
      out.push_back(v);
    }
    return out;
  }
  std::size_t begin = 0;
  while (begin <= text.size()) {
    auto end = text.find(',', begin);
    if (end == std::string::npos) end = text.size();
    out.push_back(number(text.substr(begin, end - begin)));
    begin = end + 1;
  }
  return out;
}

}  // namespace hpshield
