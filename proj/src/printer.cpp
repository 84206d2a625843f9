#include "hpshield/printer.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "overloaded.hpp"

namespace hpshield {

namespace {

// Term precedence levels, loosest first.
enum TermLevel { kSum = 0, kProduct = 1, kUnary = 2, kAtom = 3 };

using detail::Overloaded;

int term_level(const Term& t) {
  return std::visit(Overloaded{
                        [](const ConstantTerm& c) { return std::signbit(c.value) ? int(kUnary) : int(kAtom); },
                        [](const VariableTerm&) { return int(kAtom); },
                        [](const NegateTerm&) { return int(kUnary); },
                        [](const BinaryTerm& b) { return b.op == BinaryOp::Mul ? int(kProduct) : int(kSum); },
                        [](const PowerTerm&) { return int(kUnary); },
                    },
                    t.node().v);
}

void emit_term(const Term& t, std::string& out);

void emit_term_at(const Term& t, int min_level, std::string& out) {
  if (term_level(t) < min_level) {
    out += '(';
    emit_term(t, out);
    out += ')';
  } else {
    emit_term(t, out);
  }
}

void emit_term(const Term& t, std::string& out) {
  std::visit(Overloaded{
                 [&](const ConstantTerm& c) { out += format_number(c.value); },
                 [&](const VariableTerm& v) { out += v.name; },
                 [&](const NegateTerm& n) {
                   out += '-';
                   // A bare literal after '-' would read back as a negative constant.
                   if (as<ConstantTerm>(n.operand) && term_level(n.operand) == kAtom) {
                     out += '(';
                     emit_term(n.operand, out);
                     out += ')';
                   } else {
                     emit_term_at(n.operand, kUnary, out);
                   }
                 },
                 [&](const BinaryTerm& b) {
                   int level = b.op == BinaryOp::Mul ? kProduct : kSum;
                   emit_term_at(b.lhs, level, out);
                   out += b.op == BinaryOp::Add ? " + " : b.op == BinaryOp::Sub ? " - " : " * ";
                   emit_term_at(b.rhs, level + 1, out);
                 },
                 [&](const PowerTerm& p) {
                   emit_term_at(p.base, kAtom, out);
                   out += '^';
                   out += std::to_string(p.exponent);
                 },
             },
             t.node().v);
}

// Formula precedence levels, loosest first.
enum FormulaLevel { kImplies = 0, kOr = 1, kAnd = 2, kPrefix = 3, kAtomic = 4 };

int formula_level(const Formula& f) {
  return std::visit(Overloaded{
                        [](const TruthFormula&) { return int(kAtomic); },
                        [](const ComparisonFormula&) { return int(kAtomic); },
                        [](const NotFormula&) { return int(kPrefix); },
                        [](const ConnectiveFormula& c) {
                          return c.op == Connective::Implies ? int(kImplies)
                                 : c.op == Connective::Or    ? int(kOr)
                                                             : int(kAnd);
                        },
                        [](const QuantifiedFormula&) { return int(kPrefix); },
                        [](const BoxFormula&) { return int(kPrefix); },
                    },
                    f.node().v);
}

const char* relation_text(Relation r) {
  switch (r) {
    case Relation::Le: return " <= ";
    case Relation::Lt: return " < ";
    case Relation::Eq: return " = ";
    case Relation::Gt: return " > ";
    case Relation::Ge: return " >= ";
  }
  return " ? ";
}

void emit_formula(const Formula& f, std::string& out);
void emit_program(const Program& p, std::string& out);

void emit_formula_at(const Formula& f, int min_level, std::string& out) {
  if (formula_level(f) < min_level) {
    out += '(';
    emit_formula(f, out);
    out += ')';
  } else {
    emit_formula(f, out);
  }
}

void emit_formula(const Formula& f, std::string& out) {
  std::visit(Overloaded{
                 [&](const TruthFormula& t) { out += t.value ? "true" : "false"; },
                 [&](const ComparisonFormula& c) {
                   emit_term(c.lhs, out);
                   out += relation_text(c.rel);
                   emit_term(c.rhs, out);
                 },
                 [&](const NotFormula& n) {
                   out += '!';
                   emit_formula_at(n.operand, kPrefix, out);
                 },
                 [&](const ConnectiveFormula& c) {
                   if (c.op == Connective::Implies) {
                     emit_formula_at(c.lhs, kOr, out);
                     out += " -> ";
                     emit_formula_at(c.rhs, kImplies, out);
                     return;
                   }
                   int level = c.op == Connective::Or ? kOr : kAnd;
                   emit_formula_at(c.lhs, level, out);
                   out += c.op == Connective::Or ? " | " : " & ";
                   emit_formula_at(c.rhs, level + 1, out);
                 },
                 [&](const QuantifiedFormula& q) {
                   out += q.kind == Quantifier::Forall ? "forall " : "exists ";
                   out += q.var;
                   out += ". ";
                   emit_formula_at(q.body, kPrefix, out);
                 },
                 [&](const BoxFormula& b) {
                   out += '[';
                   emit_program(b.program, out);
                   out += "] ";
                   emit_formula_at(b.post, kPrefix, out);
                 },
             },
             f.node().v);
}

// Program precedence: choice binds loosest, then sequence, then statements.
enum ProgramLevel { kChoice = 0, kSeq = 1, kStatement = 2 };

int program_level(const Program& p) {
  if (as<ChoiceProgram>(p)) return kChoice;
  if (as<SeqProgram>(p)) return kSeq;
  return kStatement;
}

void emit_program_at(const Program& p, int min_level, std::string& out) {
  if (program_level(p) < min_level) {
    out += '{';
    emit_program(p, out);
    out += '}';
  } else {
    emit_program(p, out);
  }
}

void emit_program(const Program& p, std::string& out) {
  std::visit(Overloaded{
                 [&](const AssignProgram& a) {
                   out += a.var;
                   out += " := ";
                   emit_term(a.value, out);
                 },
                 [&](const AssignAnyProgram& a) {
                   out += a.var;
                   out += " := *";
                 },
                 [&](const TestProgram& t) {
                   out += '?';
                   emit_formula_at(t.condition, kAtomic, out);
                 },
                 [&](const SeqProgram& s) {
                   emit_program_at(s.first, kStatement, out);
                   out += "; ";
                   emit_program_at(s.second, kSeq, out);
                 },
                 [&](const ChoiceProgram& c) {
                   emit_program_at(c.lhs, kSeq, out);
                   out += " ++ ";
                   emit_program_at(c.rhs, kChoice, out);
                 },
                 [&](const LoopProgram& l) {
                   out += '{';
                   emit_program(l.body, out);
                   out += "}*";
                 },
                 [&](const OdeProgram& o) {
                   out += '{';
                   for (std::size_t i = 0; i < o.equations.size(); ++i) {
                     if (i) out += ", ";
                     out += o.equations[i].var;
                     out += "' = ";
                     emit_term(o.equations[i].rhs, out);
                   }
                   if (!(o.domain == truth(true))) {
                     out += " & ";
                     emit_formula(o.domain, out);
                   }
                   out += '}';
                 },
             },
             p.node().v);
}

}  // namespace

std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (res.ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf.data(), res.ptr);
}

std::string print_term(const Term& t) {
  std::string out;
  emit_term(t, out);
  return out;
}

std::string print_formula(const Formula& f) {
  std::string out;
  emit_formula(f, out);
  return out;
}

std::string print_program(const Program& p) {
  std::string out;
  emit_program(p, out);
  return out;
}

}  // namespace hpshield
