#include "machine.hpp"

#include <algorithm>
#include <array>

#include "hpshield/analysis.hpp"
#include "hpshield/eval.hpp"
#include "overloaded.hpp"

namespace hpshield::detail {

int Layout::slot(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(names_.size());
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

int Layout::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

std::vector<double> Layout::load(const State& s) {
  for (const auto& [name, value] : s.values()) slot(name);
  std::vector<double> slots(names_.size(), kUnbound);
  for (const auto& [name, value] : s.values()) slots[static_cast<std::size_t>(index_.at(name))] = value;
  return slots;
}

State Layout::store(const std::vector<double>& slots) const {
  State s;
  for (std::size_t i = 0; i < slots.size() && i < names_.size(); ++i) {
    if (!std::isnan(slots[i])) s.set(names_[i], slots[i]);
  }
  return s;
}

// ---------------------------------------------------------------- terms

CompiledTerm::CompiledTerm(const Term& t, Layout& layout) { emit(t, layout, 1); }

void CompiledTerm::emit(const Term& t, Layout& layout, int depth) {
  max_stack_ = std::max(max_stack_, depth);
  std::visit(Overloaded{
                 [&](const ConstantTerm& c) { code_.push_back({Op::Const, 0, c.value}); },
                 [&](const VariableTerm& v) {
                   code_.push_back({Op::Load, static_cast<std::uint32_t>(layout.slot(v.name)), 0});
                 },
                 [&](const NegateTerm& n) {
                   emit(n.operand, layout, depth);
                   code_.push_back({Op::Neg, 0, 0});
                 },
                 [&](const BinaryTerm& b) {
                   emit(b.lhs, layout, depth);
                   emit(b.rhs, layout, depth + 1);
                   Op op = b.op == BinaryOp::Add ? Op::Add : b.op == BinaryOp::Sub ? Op::Sub : Op::Mul;
                   code_.push_back({op, 0, 0});
                 },
                 [&](const PowerTerm& p) {
                   emit(p.base, layout, depth);
                   code_.push_back({Op::Pow, p.exponent, 0});
                 },
             },
             t.node().v);
}

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError::non_finite(what);
  return v;
}

}  // namespace

double CompiledTerm::eval(const std::vector<double>& slots, const Layout& layout) const {
  std::array<double, 32> small{};
  std::vector<double> big;
  double* stack = small.data();
  if (max_stack_ > static_cast<int>(small.size())) {
    big.resize(static_cast<std::size_t>(max_stack_));
    stack = big.data();
  }
  int top = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: stack[top++] = in.value; break;
      case Op::Load: {
        double v = slots[in.arg];
        if (std::isnan(v)) throw EvalError::unbound(layout.name(static_cast<int>(in.arg)));
        stack[top++] = v;
        break;
      }
      case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::Add:
        --top;
        stack[top - 1] = checked(stack[top - 1] + stack[top], "addition");
        break;
      case Op::Sub:
        --top;
        stack[top - 1] = checked(stack[top - 1] - stack[top], "subtraction");
        break;
      case Op::Mul:
        --top;
        stack[top - 1] = checked(stack[top - 1] * stack[top], "multiplication");
        break;
      case Op::Pow: stack[top - 1] = checked(int_power(stack[top - 1], in.arg), "power"); break;
    }
  }
  return stack[0];
}

// ------------------------------------------------------------- formulas

CompiledFormula::CompiledFormula(const Formula& f, Layout& layout) { root_ = build(f, layout); }

int CompiledFormula::build(const Formula& f, Layout& layout) {
  Node node{};
  std::visit(Overloaded{
                 [&](const TruthFormula& t) {
                   node.kind = Kind::Truth;
                   node.value = t.value;
                 },
                 [&](const ComparisonFormula& c) {
                   node.kind = Kind::Compare;
                   node.rel = c.rel;
                   node.lhs = static_cast<int>(terms_.size());
                   terms_.emplace_back(c.lhs, layout);
                   node.rhs = static_cast<int>(terms_.size());
                   terms_.emplace_back(c.rhs, layout);
                 },
                 [&](const NotFormula& n) {
                   node.kind = Kind::Not;
                   node.lhs = build(n.operand, layout);
                 },
                 [&](const ConnectiveFormula& c) {
                   node.kind = c.op == Connective::And  ? Kind::And
                               : c.op == Connective::Or ? Kind::Or
                                                        : Kind::Implies;
                   node.lhs = build(c.lhs, layout);
                   node.rhs = build(c.rhs, layout);
                 },
                 [&](const QuantifiedFormula& q) {
                   node.kind = Kind::Unsupported;
                   node.what = q.kind == Quantifier::Forall ? "forall" : "exists";
                 },
                 [&](const BoxFormula&) {
                   node.kind = Kind::Unsupported;
                   node.what = "box modality";
                 },
             },
             f.node().v);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

bool CompiledFormula::eval(const std::vector<double>& slots, const Layout& layout) const {
  return eval_node(root_, slots, layout);
}

bool CompiledFormula::eval_node(int index, const std::vector<double>& slots, const Layout& layout) const {
  const Node& n = nodes_[static_cast<std::size_t>(index)];
  switch (n.kind) {
    case Kind::Truth: return n.value;
    case Kind::Compare: {
      double l = terms_[static_cast<std::size_t>(n.lhs)].eval(slots, layout);
      double r = terms_[static_cast<std::size_t>(n.rhs)].eval(slots, layout);
      switch (n.rel) {
        case Relation::Le: return l <= r;
        case Relation::Lt: return l < r;
        case Relation::Eq: return l == r;
        case Relation::Gt: return l > r;
        case Relation::Ge: return l >= r;
      }
      return false;
    }
    case Kind::Not: return !eval_node(n.lhs, slots, layout);
    case Kind::And: return eval_node(n.lhs, slots, layout) && eval_node(n.rhs, slots, layout);
    case Kind::Or: return eval_node(n.lhs, slots, layout) || eval_node(n.rhs, slots, layout);
    case Kind::Implies: return !eval_node(n.lhs, slots, layout) || eval_node(n.rhs, slots, layout);
    case Kind::Unsupported:
      throw EvalError(EvalError::Kind::UnsupportedConnective, n.what,
                      "cannot evaluate " + n.what + " in a single state");
  }
  return false;
}

// ------------------------------------------------------------------ ODE

CompiledOde::CompiledOde(const OdeProgram& ode, Layout& layout) {
  for (const auto& eq : ode.equations) {
    vars_.push_back(layout.slot(eq.var));
    rhs_.emplace_back(eq.rhs, layout);
  }
  domain_ = CompiledFormula(ode.domain, layout);
  k1_.resize(vars_.size());
  k2_.resize(vars_.size());
  k3_.resize(vars_.size());
  k4_.resize(vars_.size());
}

void CompiledOde::derivatives(const std::vector<double>& slots, const Layout& layout,
                              std::vector<double>& out) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) out[i] = rhs_[i].eval(slots, layout);
}

void CompiledOde::rk4_step(const std::vector<double>& from, double h, std::vector<double>& to,
                           const Layout& layout) const {
  const double half = h / 2;
  derivatives(from, layout, k1_);
  scratch_ = from;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto s = static_cast<std::size_t>(vars_[i]);
    scratch_[s] = from[s] + half * k1_[i];
  }
  derivatives(scratch_, layout, k2_);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto s = static_cast<std::size_t>(vars_[i]);
    scratch_[s] = from[s] + half * k2_[i];
  }
  derivatives(scratch_, layout, k3_);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto s = static_cast<std::size_t>(vars_[i]);
    scratch_[s] = from[s] + h * k3_[i];
  }
  derivatives(scratch_, layout, k4_);
  to = from;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto s = static_cast<std::size_t>(vars_[i]);
    double next = from[s] + h * (k1_[i] + 2 * k2_[i] + 2 * k3_[i] + k4_[i]) / 6;
    if (!std::isfinite(next)) {
      throw EvalError(EvalError::Kind::NonFiniteState, layout.name(vars_[i]),
                      "integration produced a non-finite value for '" + layout.name(vars_[i]) + "'");
    }
    to[s] = next;
  }
}

FlowOutcome CompiledOde::flow(std::vector<double>& slots, const Layout& layout, double duration,
                              const FlowSettings& settings,
                              std::vector<std::pair<double, std::vector<double>>>* trajectory) const {
  FlowOutcome out;
  if (trajectory) trajectory->emplace_back(0.0, slots);
  if (duration <= 0) return out;

  std::vector<double> next;
  double t = 0;
  for (std::size_t i = 0; t < duration; ++i) {
    double t_next = static_cast<double>(i + 1) * settings.step;
    if (t_next > duration || duration - t_next < settings.step * 1e-9) t_next = duration;
    double h = t_next - t;
    rk4_step(slots, h, next, layout);
    if (!domain_.eval(next, layout)) {
      // The last good point is `slots` at time t; locate the exit inside (t, t + h].
      double lo = 0, hi = h;
      while (hi - lo > settings.event_tolerance) {
        double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        rk4_step(slots, mid, next, layout);
        if (domain_.eval(next, layout)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      if (lo > 0) {
        rk4_step(slots, lo, next, layout);
        slots.swap(next);
      }
      out.elapsed = t + lo;
      out.domain_exit = true;
      if (trajectory) trajectory->emplace_back(out.elapsed, slots);
      return out;
    }
    slots.swap(next);
    t = t_next;
    if (trajectory && settings.record_every > 0 && ((i + 1) % settings.record_every == 0 || t >= duration)) {
      trajectory->emplace_back(t, slots);
    }
  }
  out.elapsed = duration;
  if (trajectory && settings.record_every == 0) trajectory->emplace_back(duration, slots);
  return out;
}

// -------------------------------------------------------------- programs

CompiledProgram::CompiledProgram(const Program& p, Layout& layout) { root = build(p, layout); }

int CompiledProgram::build(const Program& p, Layout& layout) {
  Node node{Kind::Assign, -1, {}, -1, -1, -1, p};
  std::visit(Overloaded{
                 [&](const AssignProgram& a) {
                   node.kind = Kind::Assign;
                   node.var = layout.slot(a.var);
                   node.term = static_cast<int>(terms.size());
                   terms.emplace_back(a.value, layout);
                 },
                 [&](const AssignAnyProgram& a) {
                   node.kind = Kind::AssignAny;
                   node.var = layout.slot(a.var);
                 },
                 [&](const TestProgram& t) {
                   node.kind = Kind::Test;
                   node.formula = static_cast<int>(formulas.size());
                   formulas.emplace_back(t.condition, layout);
                 },
                 [&](const SeqProgram&) {
                   node.kind = Kind::Seq;
                   for (const auto& item : sequence_items(p)) node.children.push_back(build(item, layout));
                 },
                 [&](const ChoiceProgram&) {
                   node.kind = Kind::Choice;
                   for (const auto& branch : choice_branches(p)) node.children.push_back(build(branch, layout));
                 },
                 [&](const LoopProgram& l) {
                   node.kind = Kind::Loop;
                   node.children.push_back(build(l.body, layout));
                 },
                 [&](const OdeProgram& o) {
                   node.kind = Kind::Ode;
                   node.ode = static_cast<int>(odes.size());
                   odes.emplace_back(o, layout);
                 },
             },
             p.node().v);
  nodes.push_back(std::move(node));
  return static_cast<int>(nodes.size()) - 1;
}

}  // namespace hpshield::detail
