#include "hpshield/eval.hpp"

#include <cmath>
#include <limits>

#include "hpshield/analysis.hpp"
#include "hpshield/printer.hpp"
#include "overloaded.hpp"

namespace hpshield {

using detail::Overloaded;

double int_power(double base, unsigned exponent) {
  double result = 1.0;
  double b = base;
  while (true) {
    if (exponent & 1U) result *= b;
    exponent >>= 1U;
    if (exponent == 0) break;
    b *= b;
  }
  return result;
}

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError::non_finite(what);
  return v;
}

bool relation_holds(double lhs, Relation rel, double rhs) {
  switch (rel) {
    case Relation::Le: return lhs <= rhs;
    case Relation::Lt: return lhs < rhs;
    case Relation::Eq: return lhs == rhs;
    case Relation::Gt: return lhs > rhs;
    case Relation::Ge: return lhs >= rhs;
  }
  return false;
}

[[noreturn]] void unsupported(const char* what) {
  throw EvalError(EvalError::Kind::UnsupportedConnective, what,
                  std::string("cannot evaluate ") + what + " in a single state");
}

}  // namespace

double eval_term(const Term& t, const State& s) {
  return std::visit(
      Overloaded{
          [&](const ConstantTerm& c) { return c.value; },
          [&](const VariableTerm& v) { return s.get(v.name); },
          [&](const NegateTerm& n) { return -eval_term(n.operand, s); },
          [&](const BinaryTerm& b) {
            double l = eval_term(b.lhs, s);
            double r = eval_term(b.rhs, s);
            switch (b.op) {
              case BinaryOp::Add: return checked(l + r, "addition");
              case BinaryOp::Sub: return checked(l - r, "subtraction");
              case BinaryOp::Mul: return checked(l * r, "multiplication");
            }
            return 0.0;
          },
          [&](const PowerTerm& p) {
            return checked(int_power(eval_term(p.base, s), p.exponent), "power");
          },
      },
      t.node().v);
}

bool eval_formula(const Formula& f, const State& s) {
  return std::visit(
      Overloaded{
          [&](const TruthFormula& t) { return t.value; },
          [&](const ComparisonFormula& c) {
            return relation_holds(eval_term(c.lhs, s), c.rel, eval_term(c.rhs, s));
          },
          [&](const NotFormula& n) { return !eval_formula(n.operand, s); },
          [&](const ConnectiveFormula& c) {
            bool l = eval_formula(c.lhs, s);
            switch (c.op) {
              case Connective::And: return l && eval_formula(c.rhs, s);
              case Connective::Or: return l || eval_formula(c.rhs, s);
              case Connective::Implies: return !l || eval_formula(c.rhs, s);
            }
            return false;
          },
          [&](const QuantifiedFormula& q) -> bool {
            unsupported(q.kind == Quantifier::Forall ? "forall" : "exists");
          },
          [&](const BoxFormula&) -> bool { unsupported("box modality"); },
      },
      f.node().v);
}

namespace {

double nnf_robustness(const Formula& f, const State& s) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      Overloaded{
          [&](const TruthFormula& t) { return t.value ? inf : -inf; },
          [&](const ComparisonFormula& c) {
            double l = eval_term(c.lhs, s);
            double r = eval_term(c.rhs, s);
            switch (c.rel) {
              case Relation::Le:
              case Relation::Lt: return checked(r - l, "robustness margin");
              case Relation::Ge:
              case Relation::Gt: return checked(l - r, "robustness margin");
              case Relation::Eq: return -std::abs(checked(l - r, "robustness margin"));
            }
            return 0.0;
          },
          [&](const ConnectiveFormula& c) {
            double l = nnf_robustness(c.lhs, s);
            double r = nnf_robustness(c.rhs, s);
            return c.op == Connective::And ? std::min(l, r) : std::max(l, r);
          },
          [&](const auto&) -> double { unsupported("non-normalized connective"); },
      },
      f.node().v);
}

}  // namespace

double robustness(const Formula& f, const State& s) {
  return nnf_robustness(negation_normal_form(f), s);
}

}  // namespace hpshield
