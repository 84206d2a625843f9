#include "hpshield/exec.hpp"

#include <cmath>
#include <ostream>

#include "hpshield/analysis.hpp"
#include "hpshield/printer.hpp"
#include "machine.hpp"
#include "overloaded.hpp"

namespace hpshield {

using detail::CompiledProgram;
using detail::Overloaded;

std::string to_string(const Decision& d) {
  return std::visit(Overloaded{
                        [](const ChoiceDecision& c) { return "choice " + std::to_string(c.index); },
                        [](const SampleDecision& s) { return "sample " + format_number(s.value); },
                        [](const DwellDecision& w) { return "dwell " + format_number(w.duration); },
                    },
                    d);
}

const Decision& ScriptedResolver::take(const char* expected) {
  if (next_ >= script_.size()) {
    throw ResolverError(std::string("decision script exhausted while asking for a ") + expected);
  }
  return script_[next_++];
}

std::size_t ScriptedResolver::choose(std::size_t branch_count, const ChoiceContext&) {
  const auto* c = std::get_if<ChoiceDecision>(&take("choice"));
  if (!c) throw ResolverError("decision script out of step: expected a choice");
  if (c->index >= branch_count) throw ResolverError("scripted choice index out of range");
  return c->index;
}

double ScriptedResolver::sample_any(const std::string&, const State&) {
  const auto* s = std::get_if<SampleDecision>(&take("sample"));
  if (!s) throw ResolverError("decision script out of step: expected a sample");
  return s->value;
}

double ScriptedResolver::duration(const Program&, const State&) {
  const auto* w = std::get_if<DwellDecision>(&take("dwell time"));
  if (!w) throw ResolverError("decision script out of step: expected a dwell time");
  return w->duration;
}

const char* to_string(TraceEvent::Kind kind) {
  switch (kind) {
    case TraceEvent::Kind::Initial: return "initial";
    case TraceEvent::Kind::Discrete: return "discrete";
    case TraceEvent::Kind::Continuous: return "continuous";
    case TraceEvent::Kind::TestFailure: return "test_failure";
  }
  return "unknown";
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  VariableSet names;
  for (const auto& e : trace) {
    for (const auto& [name, value] : e.state.values()) names.insert(name);
  }
  out << "time,event_kind";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& e : trace) {
    out << format_number(e.time) << ',' << to_string(e.kind);
    for (const auto& n : names) {
      out << ',';
      if (auto v = e.state.find(n)) out << format_number(*v);
    }
    out << '\n';
  }
}

struct Executor::Impl {
  explicit Impl(Program p) : program(std::move(p)) {}
  Program program;
  RunOptions options;
  mutable detail::Layout layout;
  std::unique_ptr<CompiledProgram> compiled;
};

namespace {

class Interpreter {
 public:
  Interpreter(const CompiledProgram& prog, detail::Layout& layout, const RunOptions& options,
              Resolver& resolver, RunResult& result)
      : prog_(prog), layout_(layout), options_(options), resolver_(resolver), result_(result) {}

  std::vector<double> slots;
  double time = 0;

  // False when a test failed.
  bool exec(int index) {
    const auto& node = prog_.nodes[static_cast<std::size_t>(index)];
    switch (node.kind) {
      case CompiledProgram::Kind::Assign: {
        double value = prog_.terms[static_cast<std::size_t>(node.term)].eval(slots, layout_);
        slots[static_cast<std::size_t>(node.var)] = value;
        event(TraceEvent::Kind::Discrete, print_program(node.source));
        return true;
      }
      case CompiledProgram::Kind::AssignAny: {
        State s = layout_.store(slots);
        double value = resolver_.sample_any(layout_.name(node.var), s);
        if (!std::isfinite(value)) throw ResolverError("resolver returned a non-finite sample");
        result_.decisions.push_back(SampleDecision{value});
        slots[static_cast<std::size_t>(node.var)] = value;
        event(TraceEvent::Kind::Discrete, layout_.name(node.var) + " := " + format_number(value));
        return true;
      }
      case CompiledProgram::Kind::Test: {
        if (prog_.formulas[static_cast<std::size_t>(node.formula)].eval(slots, layout_)) {
          event(TraceEvent::Kind::Discrete, print_program(node.source));
          return true;
        }
        fail(as<TestProgram>(node.source)->condition, print_program(node.source));
        return false;
      }
      case CompiledProgram::Kind::Seq:
        for (int child : node.children) {
          if (!exec(child)) return false;
        }
        return true;
      case CompiledProgram::Kind::Choice: {
        State s = layout_.store(slots);
        ChoiceContext ctx{ChoiceContext::Kind::Choice, node.source, 0, s};
        std::size_t pick = resolver_.choose(node.children.size(), ctx);
        if (pick >= node.children.size()) throw ResolverError("resolver chose a branch out of range");
        result_.decisions.push_back(ChoiceDecision{pick});
        return exec(node.children[pick]);
      }
      case CompiledProgram::Kind::Loop:
        for (std::size_t iteration = 0;; ++iteration) {
          State s = layout_.store(slots);
          ChoiceContext ctx{ChoiceContext::Kind::Loop, node.source, iteration, s};
          std::size_t pick = resolver_.choose(2, ctx);
          if (pick >= 2) throw ResolverError("resolver answered a loop question out of range");
          result_.decisions.push_back(ChoiceDecision{pick});
          if (pick == 0) return true;
          if (!exec(node.children.front())) return false;
        }
      case CompiledProgram::Kind::Ode: {
        const auto& ode = prog_.odes[static_cast<std::size_t>(node.ode)];
        State s = layout_.store(slots);
        double duration = resolver_.duration(node.source, s);
        if (!std::isfinite(duration) || duration < 0) {
          throw ResolverError("resolver returned an invalid dwell time");
        }
        result_.decisions.push_back(DwellDecision{duration});
        if (!ode.domain_holds(slots, layout_)) {
          fail(as<OdeProgram>(node.source)->domain, "evolution domain false on entry");
          return false;
        }
        detail::FlowSettings settings{options_.flow.step, options_.flow.event_tolerance,
                                      options_.record_every};
        std::vector<std::pair<double, std::vector<double>>> points;
        bool detailed = options_.record_every > 0;
        auto outcome = ode.flow(slots, layout_, duration, settings, detailed ? &points : nullptr);
        if (detailed) {
          double start = time;
          double previous = 0;
          for (std::size_t i = 1; i < points.size(); ++i) {
            TraceEvent e{TraceEvent::Kind::Continuous, start + points[i].first, layout_.store(points[i].second),
                         "evolve", points[i].first - previous};
            previous = points[i].first;
            result_.trace.push_back(std::move(e));
          }
          time = start + outcome.elapsed;
        } else {
          time += outcome.elapsed;
          TraceEvent e{TraceEvent::Kind::Continuous, time, layout_.store(slots), "evolve", outcome.elapsed};
          result_.trace.push_back(std::move(e));
        }
        return true;
      }
    }
    return true;
  }

 private:
  void event(TraceEvent::Kind kind, std::string description) {
    result_.trace.push_back(TraceEvent{kind, time, layout_.store(slots), std::move(description), 0});
  }

  void fail(const Formula& condition, std::string description) {
    result_.failed_test = condition;
    event(TraceEvent::Kind::TestFailure, std::move(description));
  }

  const CompiledProgram& prog_;
  detail::Layout& layout_;
  const RunOptions& options_;
  Resolver& resolver_;
  RunResult& result_;
};

}  // namespace

Executor::Executor(const Program& program, RunOptions options) : impl_(std::make_unique<Impl>(program)) {
  if (!(options.flow.step > 0)) throw std::invalid_argument("integration step must be positive");
  impl_->options = options;
  impl_->compiled = std::make_unique<CompiledProgram>(program, impl_->layout);
}

Executor::~Executor() = default;
Executor::Executor(Executor&&) noexcept = default;
Executor& Executor::operator=(Executor&&) noexcept = default;

const Program& Executor::program() const { return impl_->program; }

RunResult Executor::operator()(const State& initial, Resolver& resolver) const {
  RunResult result;
  Interpreter interp(*impl_->compiled, impl_->layout, impl_->options, resolver, result);
  interp.slots = impl_->layout.load(initial);
  result.trace.push_back(TraceEvent{TraceEvent::Kind::Initial, 0, initial, "initial", 0});
  bool ok = interp.exec(impl_->compiled->root);
  result.outcome = ok ? RunResult::Outcome::Completed : RunResult::Outcome::Aborted;
  result.state = impl_->layout.store(interp.slots);
  return result;
}

RunResult run(const Program& program, const State& initial, Resolver& resolver, const RunOptions& options) {
  return Executor(program, options)(initial, resolver);
}

}  // namespace hpshield
