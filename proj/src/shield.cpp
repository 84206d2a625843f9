#include "hpshield/shield.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "hpshield/analysis.hpp"
#include "hpshield/eval.hpp"
#include "hpshield/exec.hpp"
#include "hpshield/parser.hpp"
#include "hpshield/printer.hpp"

namespace hpshield {

GuardTable::GuardTable(std::vector<GuardEntry> entries, std::string fallback)
    : entries_(std::move(entries)), fallback_(std::move(fallback)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.action.empty()) throw std::invalid_argument("empty action id");
    if (!seen.insert(e.action).second) throw std::invalid_argument("duplicate action id '" + e.action + "'");
  }
  const GuardEntry* f = find(fallback_);
  if (!f) {
    throw ShieldError(ShieldError::Kind::InvalidFallback, fallback_,
                      "fallback action '" + fallback_ + "' is not in the table");
  }
  if (!(f->guard == truth(true))) {
    throw ShieldError(ShieldError::Kind::InvalidFallback, fallback_,
                      "fallback action '" + fallback_ + "' is guarded by " + print_formula(f->guard) +
                          "; it must always be admissible");
  }
}

const GuardEntry* GuardTable::find(const std::string& action) const {
  for (const auto& e : entries_) {
    if (e.action == action) return &e;
  }
  return nullptr;
}

const GuardEntry& GuardTable::at(const std::string& action) const {
  if (const auto* e = find(action)) return *e;
  throw ShieldError(ShieldError::Kind::UnknownAction, action, "unknown action '" + action + "'");
}

std::vector<std::string> GuardTable::actions() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.action);
  return out;
}

bool GuardTable::operator==(const GuardTable& other) const {
  if (fallback_ != other.fallback_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.action != b.action || !(a.guard == b.guard) || a.assignments.size() != b.assignments.size()) return false;
    for (std::size_t k = 0; k < a.assignments.size(); ++k) {
      if (a.assignments[k].first != b.assignments[k].first || !(a.assignments[k].second == b.assignments[k].second)) {
        return false;
      }
    }
  }
  return true;
}

GuardTable extract_guards(const Program& controller, const std::string& fallback,
                          const std::vector<std::string>& labels) {
  auto branches = choice_branches(controller);
  if (!labels.empty() && labels.size() != branches.size()) {
    throw std::invalid_argument("got " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(branches.size()) + " branches");
  }
  std::vector<GuardEntry> entries;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    std::vector<Formula> tests;
    GuardEntry entry{labels.empty() ? "branch_" + std::to_string(k) : labels[k], {}, truth(true)};
    for (const Program& item : sequence_items(branches[k])) {
      auto reject = [&](const std::string& why) {
        throw ShieldError(ShieldError::Kind::NotCanonicalForm, print_program(item),
                          "controller is not a guarded choice: " + why + " in '" + print_program(item) + "'");
      };
      if (const auto* t = as<TestProgram>(item)) {
        if (!entry.assignments.empty()) reject("test after an assignment");
        tests.push_back(t->condition);
      } else if (const auto* a = as<AssignProgram>(item)) {
        entry.assignments.emplace_back(a->var, a->value);
      } else if (as<OdeProgram>(item)) {
        reject("differential equation");
      } else if (as<LoopProgram>(item)) {
        reject("loop");
      } else if (as<ChoiceProgram>(item)) {
        reject("nested choice");
      } else {
        reject("nondeterministic assignment");
      }
    }
    entry.guard = conjunction(tests);
    entries.push_back(std::move(entry));
  }
  return GuardTable(std::move(entries), fallback);
}

namespace {

Program branch_program(const GuardEntry& e) {
  std::vector<Program> items;
  if (!(e.guard == truth(true)) || e.assignments.empty()) items.push_back(test(e.guard));
  for (const auto& [v, t] : e.assignments) items.push_back(assign(v, t));
  Program out = items.back();
  for (std::size_t i = items.size() - 1; i-- > 0;) out = seq(items[i], out);
  return out;
}

}  // namespace

Program controller_program(const GuardTable& table) {
  const auto& entries = table.entries();
  Program out = branch_program(entries.back());
  for (std::size_t i = entries.size() - 1; i-- > 0;) out = choice(branch_program(entries[i]), out);
  return out;
}

std::string print_guard_table(const GuardTable& table) {
  std::string out = "// fallback: " + table.fallback() + "\n";
  bool first = true;
  for (const auto& e : table.entries()) {
    if (!first) out += "++\n";
    first = false;
    out += "// action: " + e.action + "\n" + print_program(branch_program(e)) + "\n";
  }
  return out;
}

GuardTable parse_guard_table(std::string_view text) {
  std::vector<std::string> labels;
  std::string fallback;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    auto value = [&](std::string_view tag) -> std::optional<std::string> {
      if (line.substr(0, tag.size()) != tag) return std::nullopt;
      std::string_view rest = line.substr(tag.size());
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      return std::string(rest);
    };
    if (auto f = value("// fallback:")) fallback = *f;
    if (auto a = value("// action:")) labels.push_back(*a);
    pos = eol + 1;
  }
  if (fallback.empty()) {
    throw ShieldError(ShieldError::Kind::InvalidFallback, "", "guard table text names no '// fallback:'");
  }
  return extract_guards(parse_program(text), fallback, labels);
}

ShieldDecision shield_action(const GuardTable& table, const State& s, const std::string& proposed, double margin) {
  const GuardEntry& e = table.at(proposed);
  if (robustness(e.guard, s) >= margin) return {proposed, false};
  return {table.fallback(), true};
}

State apply_action(const GuardTable& table, const State& s, const std::string& action) {
  const GuardEntry& e = table.at(action);
  State out = s;
  for (const auto& [v, t] : e.assignments) out.set(v, eval_term(t, out));
  return out;
}

void ModelParams::validate() const {
  auto bad = [](const char* name, const std::string& why) {
    throw ShieldError(ShieldError::Kind::InvalidParams, name, std::string("invalid parameter ") + name + ": " + why);
  };
  if (!std::isfinite(A) || A < 0) bad("A", "must be finite and >= 0");
  if (!std::isfinite(b) || b <= 0) bad("b", "must be finite and > 0");
  if (!std::isfinite(eps) || eps <= 0) bad("eps", "must be finite and > 0");
}

void ModelParams::store(State& s) const {
  s.set("A", A);
  s.set("b", b);
  s.set("eps", eps);
}

namespace {

class ElapsedResolver : public Resolver {
 public:
  explicit ElapsedResolver(double elapsed) : elapsed_(elapsed) {}
  std::size_t choose(std::size_t, const ChoiceContext&) override {
    throw ResolverError("plant programs for mismatch detection must be deterministic");
  }
  double sample_any(const std::string&, const State&) override {
    throw ResolverError("plant programs for mismatch detection must be deterministic");
  }
  double duration(const Program&, const State&) override { return elapsed_; }

 private:
  double elapsed_;
};

void collect_ode_vars(const Program& p, VariableSet& out) {
  if (const auto* o = as<OdeProgram>(p)) {
    for (const auto& eq : o->equations) out.insert(eq.var);
  } else if (const auto* s = as<SeqProgram>(p)) {
    collect_ode_vars(s->first, out);
    collect_ode_vars(s->second, out);
  } else if (const auto* c = as<ChoiceProgram>(p)) {
    collect_ode_vars(c->lhs, out);
    collect_ode_vars(c->rhs, out);
  } else if (const auto* l = as<LoopProgram>(p)) {
    collect_ode_vars(l->body, out);
  }
}

}  // namespace

struct MismatchDetector::Impl {
  Impl(GuardTable t, const Program& plant, FlowOptions flow)
      : table(std::move(t)), executor(plant, RunOptions{flow, 0}) {
    collect_ode_vars(plant, ode_vars);
  }
  GuardTable table;
  Executor executor;
  VariableSet ode_vars;
};

MismatchDetector::MismatchDetector(GuardTable table, const Program& plant, FlowOptions flow)
    : impl_(std::make_unique<Impl>(std::move(table), plant, flow)) {}
MismatchDetector::~MismatchDetector() = default;
MismatchDetector::MismatchDetector(MismatchDetector&&) noexcept = default;
MismatchDetector& MismatchDetector::operator=(MismatchDetector&&) noexcept = default;

State MismatchDetector::predict(const TransitionRecord& record, const ModelParams& params) const {
  State s = record.before;
  params.store(s);
  s = apply_action(impl_->table, s, record.action);
  ElapsedResolver resolver(record.elapsed);
  RunResult r = impl_->executor(s, resolver);
  if (!r.completed()) throw std::runtime_error("plant model rejected the recorded before-state");
  return r.state;
}

MismatchReport MismatchDetector::check(std::span<const TransitionRecord> window, const ModelParams& params,
                                       double threshold) const {
  if (window.empty()) throw ShieldError(ShieldError::Kind::EmptyWindow, "", "mismatch window is empty");
  MismatchReport report;
  report.window = window.size();
  for (const auto& v : impl_->ode_vars) report.residuals[v] = 0;
  for (const auto& rec : window) {
    State predicted = predict(rec, params);
    for (const auto& v : impl_->ode_vars) {
      auto observed = rec.after.find(v);
      auto expected = predicted.find(v);
      if (!observed || !expected) continue;
      double r = std::abs(*expected - *observed);
      auto& slot = report.residuals[v];
      slot = std::max(slot, r);
      report.max_residual = std::max(report.max_residual, r);
    }
  }
  report.flagged = report.max_residual > threshold;
  return report;
}

MismatchReport detect_mismatch(std::span<const TransitionRecord> window, const GuardTable& table,
                               const ModelParams& params, const Program& plant, double threshold,
                               const FlowOptions& flow) {
  if (window.empty()) throw ShieldError(ShieldError::Kind::EmptyWindow, "", "mismatch window is empty");
  return MismatchDetector(table, plant, flow).check(window, params, threshold);
}

ModelParams estimate_params(std::span<const TransitionRecord> records, const EstimationSpec& spec) {
  double brake_dtdv = 0, brake_dt2 = 0, accel_dtdv = 0, accel_dt2 = 0, eps = 0;
  for (const auto& r : records) {
    if (!(r.elapsed > 0)) continue;
    double dv = r.after.get(spec.velocity) - r.before.get(spec.velocity);
    double dt = r.elapsed;
    if (r.action == spec.brake_action) {
      brake_dtdv += dt * dv;
      brake_dt2 += dt * dt;
    } else if (r.action == spec.accel_action) {
      accel_dtdv += dt * dv;
      accel_dt2 += dt * dt;
    } else {
      continue;
    }
    eps = std::max(eps, dt);
  }
  auto missing = [](const std::string& action) {
    throw ShieldError(ShieldError::Kind::InsufficientData, action,
                      "no transitions with positive elapsed time for action '" + action + "'");
  };
  if (brake_dt2 == 0) missing(spec.brake_action);
  if (accel_dt2 == 0) missing(spec.accel_action);
  return ModelParams{accel_dtdv / accel_dt2, -(brake_dtdv / brake_dt2), eps};
}

GuardTable resynthesize_guards(const GuardTable& table, const ModelParams& old_params, const ModelParams& updated,
                               double safety_factor) {
  old_params.validate();
  updated.validate();
  if (!(safety_factor > 0 && safety_factor <= 1)) {
    throw ShieldError(ShieldError::Kind::InvalidParams, "safety_factor", "safety factor must lie in (0, 1]");
  }
  Substitution sub{{"A", constant(updated.A)},
                   {"b", constant(safety_factor * updated.b)},
                   {"eps", constant(updated.eps)}};
  std::vector<GuardEntry> entries = table.entries();
  for (auto& e : entries) e.guard = substitute(e.guard, sub);
  return GuardTable(std::move(entries), table.fallback());
}

void write_transitions_csv(std::ostream& out, std::span<const TransitionRecord> records) {
  VariableSet names;
  for (const auto& r : records) {
    for (const auto& [n, v] : r.before.values()) names.insert(n);
    for (const auto& [n, v] : r.after.values()) names.insert(n);
  }
  for (const auto& n : names) out << "before_" << n << ',';
  out << "action";
  for (const auto& n : names) out << ",after_" << n;
  out << ",dt\n";
  for (const auto& r : records) {
    for (const auto& n : names) {
      if (auto v = r.before.find(n)) out << format_number(*v);
      out << ',';
    }
    out << r.action;
    for (const auto& n : names) {
      out << ',';
      if (auto v = r.after.find(n)) out << format_number(*v);
    }
    out << ',' << format_number(r.elapsed) << '\n';
  }
}

}  // namespace hpshield
