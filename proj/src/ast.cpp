#include "hpshield/ast.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <unordered_set>

namespace hpshield {

bool operator==(const Term& a, const Term& b) {
  return a.same_node(b) || a.node().v == b.node().v;
}
bool operator==(const Formula& a, const Formula& b) {
  return a.same_node(b) || a.node().v == b.node().v;
}
bool operator==(const Program& a, const Program& b) {
  return a.same_node(b) || a.node().v == b.node().v;
}

namespace {

template <class Node, class Handle, class Alt>
Handle make(Alt alt) {
  return Handle(std::make_shared<const Node>(Node{std::move(alt)}));
}

Term make_term(auto alt) { return make<TermNode, Term>(std::move(alt)); }
Formula make_formula(auto alt) { return make<FormulaNode, Formula>(std::move(alt)); }
Program make_program(auto alt) { return make<ProgramNode, Program>(std::move(alt)); }

constexpr std::array<std::string_view, 4> kReserved = {"true", "false", "forall", "exists"};

}  // namespace

Term constant(double value) { return make_term(ConstantTerm{value}); }
Term var(std::string name) { return make_term(VariableTerm{std::move(name)}); }
Term operator-(const Term& t) { return make_term(NegateTerm{t}); }
Term operator+(const Term& a, const Term& b) { return make_term(BinaryTerm{BinaryOp::Add, a, b}); }
Term operator-(const Term& a, const Term& b) { return make_term(BinaryTerm{BinaryOp::Sub, a, b}); }
Term operator*(const Term& a, const Term& b) { return make_term(BinaryTerm{BinaryOp::Mul, a, b}); }
Term power(const Term& base, unsigned exponent) {
  if (exponent < 1) throw std::invalid_argument("power exponent must be >= 1");
  return make_term(PowerTerm{base, exponent});
}

Formula truth(bool value) { return make_formula(TruthFormula{value}); }
Formula compare(const Term& lhs, Relation rel, const Term& rhs) {
  return make_formula(ComparisonFormula{lhs, rel, rhs});
}
Formula operator!(const Formula& f) { return make_formula(NotFormula{f}); }
Formula operator&&(const Formula& a, const Formula& b) {
  return make_formula(ConnectiveFormula{Connective::And, a, b});
}
Formula operator||(const Formula& a, const Formula& b) {
  return make_formula(ConnectiveFormula{Connective::Or, a, b});
}
Formula implies(const Formula& a, const Formula& b) {
  return make_formula(ConnectiveFormula{Connective::Implies, a, b});
}
Formula quantify(Quantifier kind, std::string var, const Formula& body) {
  return make_formula(QuantifiedFormula{kind, std::move(var), body});
}
Formula box(const Program& program, const Formula& post) {
  return make_formula(BoxFormula{program, post});
}

Program assign(std::string var, const Term& value) {
  return make_program(AssignProgram{std::move(var), value});
}
Program assign_any(std::string var) { return make_program(AssignAnyProgram{std::move(var)}); }
Program test(const Formula& condition) { return make_program(TestProgram{condition}); }
Program seq(const Program& first, const Program& second) {
  return make_program(SeqProgram{first, second});
}
Program choice(const Program& lhs, const Program& rhs) {
  return make_program(ChoiceProgram{lhs, rhs});
}
Program loop(const Program& body) { return make_program(LoopProgram{body}); }
Program ode(std::vector<OdeEquation> equations, const Formula& domain) {
  if (equations.empty()) throw std::invalid_argument("ODE needs at least one equation");
  std::unordered_set<std::string> seen;
  for (const auto& eq : equations) {
    if (!seen.insert(eq.var).second)
      throw std::invalid_argument("ODE repeats variable '" + eq.var + "'");
  }
  return make_program(OdeProgram{std::move(equations), domain});
}

bool is_reserved_word(std::string_view name) {
  return std::find(kReserved.begin(), kReserved.end(), name) != kReserved.end();
}

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(name.front())) return false;
  for (char c : name) {
    if (!alpha(c) && !digit(c) && c != '_') return false;
  }
  return !is_reserved_word(name);
}

}  // namespace hpshield
