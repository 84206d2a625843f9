#include "hpshield/analysis.hpp"

#include "hpshield/state.hpp"
#include "overloaded.hpp"

namespace hpshield {

using detail::Overloaded;

namespace {

void collect(const Term& t, VariableSet& out);
void collect(const Formula& f, VariableSet& out);
void collect(const Program& p, VariableSet& out);

void collect(const Term& t, VariableSet& out) {
  std::visit(Overloaded{
                 [&](const ConstantTerm&) {},
                 [&](const VariableTerm& v) { out.insert(v.name); },
                 [&](const NegateTerm& n) { collect(n.operand, out); },
                 [&](const BinaryTerm& b) {
                   collect(b.lhs, out);
                   collect(b.rhs, out);
                 },
                 [&](const PowerTerm& p) { collect(p.base, out); },
             },
             t.node().v);
}

void collect(const Formula& f, VariableSet& out) {
  std::visit(Overloaded{
                 [&](const TruthFormula&) {},
                 [&](const ComparisonFormula& c) {
                   collect(c.lhs, out);
                   collect(c.rhs, out);
                 },
                 [&](const NotFormula& n) { collect(n.operand, out); },
                 [&](const ConnectiveFormula& c) {
                   collect(c.lhs, out);
                   collect(c.rhs, out);
                 },
                 [&](const QuantifiedFormula& q) {
                   out.insert(q.var);
                   collect(q.body, out);
                 },
                 [&](const BoxFormula& b) {
                   collect(b.program, out);
                   collect(b.post, out);
                 },
             },
             f.node().v);
}

void collect(const Program& p, VariableSet& out) {
  std::visit(Overloaded{
                 [&](const AssignProgram& a) {
                   out.insert(a.var);
                   collect(a.value, out);
                 },
                 [&](const AssignAnyProgram& a) { out.insert(a.var); },
                 [&](const TestProgram& t) { collect(t.condition, out); },
                 [&](const SeqProgram& s) {
                   collect(s.first, out);
                   collect(s.second, out);
                 },
                 [&](const ChoiceProgram& c) {
                   collect(c.lhs, out);
                   collect(c.rhs, out);
                 },
                 [&](const LoopProgram& l) { collect(l.body, out); },
                 [&](const OdeProgram& o) {
                   for (const auto& eq : o.equations) {
                     out.insert(eq.var);
                     collect(eq.rhs, out);
                   }
                   collect(o.domain, out);
                 },
             },
             p.node().v);
}

}  // namespace

VariableSet variables(const Term& t) {
  VariableSet out;
  collect(t, out);
  return out;
}
VariableSet variables(const Formula& f) {
  VariableSet out;
  collect(f, out);
  return out;
}
VariableSet variables(const Program& p) {
  VariableSet out;
  collect(p, out);
  return out;
}

Term substitute(const Term& t, const Substitution& sub) {
  return std::visit(Overloaded{
                        [&](const ConstantTerm&) { return t; },
                        [&](const VariableTerm& v) {
                          auto it = sub.find(v.name);
                          return it == sub.end() ? t : it->second;
                        },
                        [&](const NegateTerm& n) { return -substitute(n.operand, sub); },
                        [&](const BinaryTerm& b) {
                          Term l = substitute(b.lhs, sub);
                          Term r = substitute(b.rhs, sub);
                          switch (b.op) {
                            case BinaryOp::Add: return l + r;
                            case BinaryOp::Sub: return l - r;
                            case BinaryOp::Mul: return l * r;
                          }
                          return t;
                        },
                        [&](const PowerTerm& p) { return power(substitute(p.base, sub), p.exponent); },
                    },
                    t.node().v);
}

Formula substitute(const Formula& f, const Substitution& sub) {
  return std::visit(
      Overloaded{
          [&](const TruthFormula&) { return f; },
          [&](const ComparisonFormula& c) {
            return compare(substitute(c.lhs, sub), c.rel, substitute(c.rhs, sub));
          },
          [&](const NotFormula& n) { return !substitute(n.operand, sub); },
          [&](const ConnectiveFormula& c) {
            Formula l = substitute(c.lhs, sub);
            Formula r = substitute(c.rhs, sub);
            switch (c.op) {
              case Connective::And: return l && r;
              case Connective::Or: return l || r;
              case Connective::Implies: return implies(l, r);
            }
            return f;
          },
          [&](const QuantifiedFormula& q) {
            if (sub.find(q.var) == sub.end()) return quantify(q.kind, q.var, substitute(q.body, sub));
            Substitution inner = sub;
            inner.erase(q.var);
            return quantify(q.kind, q.var, substitute(q.body, inner));
          },
          [&](const BoxFormula& b) { return box(substitute(b.program, sub), substitute(b.post, sub)); },
      },
      f.node().v);
}

Program substitute(const Program& p, const Substitution& sub) {
  return std::visit(Overloaded{
                        [&](const AssignProgram& a) { return assign(a.var, substitute(a.value, sub)); },
                        [&](const AssignAnyProgram&) { return p; },
                        [&](const TestProgram& t) { return test(substitute(t.condition, sub)); },
                        [&](const SeqProgram& s) {
                          return seq(substitute(s.first, sub), substitute(s.second, sub));
                        },
                        [&](const ChoiceProgram& c) {
                          return choice(substitute(c.lhs, sub), substitute(c.rhs, sub));
                        },
                        [&](const LoopProgram& l) { return loop(substitute(l.body, sub)); },
                        [&](const OdeProgram& o) {
                          std::vector<OdeEquation> eqs;
                          eqs.reserve(o.equations.size());
                          for (const auto& eq : o.equations) eqs.push_back({eq.var, substitute(eq.rhs, sub)});
                          return ode(std::move(eqs), substitute(o.domain, sub));
                        },
                    },
                    p.node().v);
}

namespace {

Formula nnf(const Formula& f, bool negated) {
  return std::visit(
      Overloaded{
          [&](const TruthFormula& t) { return truth(t.value != negated); },
          [&](const ComparisonFormula& c) {
            if (!negated) return f;
            switch (c.rel) {
              case Relation::Le: return compare(c.lhs, Relation::Gt, c.rhs);
              case Relation::Lt: return compare(c.lhs, Relation::Ge, c.rhs);
              case Relation::Gt: return compare(c.lhs, Relation::Le, c.rhs);
              case Relation::Ge: return compare(c.lhs, Relation::Lt, c.rhs);
              case Relation::Eq:
                return compare(c.lhs, Relation::Lt, c.rhs) || compare(c.lhs, Relation::Gt, c.rhs);
            }
            return f;
          },
          [&](const NotFormula& n) { return nnf(n.operand, !negated); },
          [&](const ConnectiveFormula& c) {
            // a -> b  ==  !a | b
            bool lhs_negated = c.op == Connective::Implies ? !negated : negated;
            Formula l = nnf(c.lhs, lhs_negated);
            Formula r = nnf(c.rhs, negated);
            bool is_and = (c.op == Connective::And) != negated;
            return is_and ? (l && r) : (l || r);
          },
          [&](const QuantifiedFormula&) -> Formula {
            throw EvalError(EvalError::Kind::UnsupportedConnective, "quantifier",
                            "quantified formulas have no negation normal form here");
          },
          [&](const BoxFormula&) -> Formula {
            throw EvalError(EvalError::Kind::UnsupportedConnective, "box modality",
                            "box formulas have no negation normal form here");
          },
      },
      f.node().v);
}

}  // namespace

Formula negation_normal_form(const Formula& f) { return nnf(f, false); }

Formula conjunction(const std::vector<Formula>& parts) {
  if (parts.empty()) return truth(true);
  Formula out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = out && parts[i];
  return out;
}

bool is_first_order_free(const Formula& f) {
  return std::visit(Overloaded{
                        [](const TruthFormula&) { return true; },
                        [](const ComparisonFormula&) { return true; },
                        [](const NotFormula& n) { return is_first_order_free(n.operand); },
                        [](const ConnectiveFormula& c) {
                          return is_first_order_free(c.lhs) && is_first_order_free(c.rhs);
                        },
                        [](const QuantifiedFormula&) { return false; },
                        [](const BoxFormula&) { return false; },
                    },
                    f.node().v);
}

std::vector<Program> choice_branches(const Program& p) {
  std::vector<Program> out;
  auto walk = [&](auto&& self, const Program& node) -> void {
    if (const auto* c = as<ChoiceProgram>(node)) {
      self(self, c->lhs);
      self(self, c->rhs);
    } else {
      out.push_back(node);
    }
  };
  walk(walk, p);
  return out;
}

std::vector<Program> sequence_items(const Program& p) {
  std::vector<Program> out;
  auto walk = [&](auto&& self, const Program& node) -> void {
    if (const auto* s = as<SeqProgram>(node)) {
      self(self, s->first);
      self(self, s->second);
    } else {
      out.push_back(node);
    }
  };
  walk(walk, p);
  return out;
}

}  // namespace hpshield
