#pragma once

// Abstract syntax for hybrid programs and differential dynamic logic.
//
// Terms, formulas and programs are immutable trees with value semantics: each
// handle shares its node, so copying a subtree is cheap and trees may be read
// from any number of threads. Equality is structural.

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace hpshield {

struct TermNode;
struct FormulaNode;
struct ProgramNode;

class Term {
 public:
  explicit Term(std::shared_ptr<const TermNode> node) : node_(std::move(node)) {}
  const TermNode& node() const { return *node_; }
  bool same_node(const Term& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<const TermNode> node_;
};

class Formula {
 public:
  explicit Formula(std::shared_ptr<const FormulaNode> node) : node_(std::move(node)) {}
  const FormulaNode& node() const { return *node_; }
  bool same_node(const Formula& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<const FormulaNode> node_;
};

class Program {
 public:
  explicit Program(std::shared_ptr<const ProgramNode> node) : node_(std::move(node)) {}
  const ProgramNode& node() const { return *node_; }
  bool same_node(const Program& other) const { return node_ == other.node_; }
  const ProgramNode* identity() const { return node_.get(); }

 private:
  std::shared_ptr<const ProgramNode> node_;
};

bool operator==(const Term& a, const Term& b);
bool operator==(const Formula& a, const Formula& b);
bool operator==(const Program& a, const Program& b);

// ---------------------------------------------------------------- terms

enum class BinaryOp { Add, Sub, Mul };

struct ConstantTerm {
  double value;
  bool operator==(const ConstantTerm&) const = default;
};
struct VariableTerm {
  std::string name;
  bool operator==(const VariableTerm&) const = default;
};
struct NegateTerm {
  Term operand;
  bool operator==(const NegateTerm&) const = default;
};
struct BinaryTerm {
  BinaryOp op;
  Term lhs;
  Term rhs;
  bool operator==(const BinaryTerm&) const = default;
};
/// Integer power with exponent >= 1.
struct PowerTerm {
  Term base;
  unsigned exponent;
  bool operator==(const PowerTerm&) const = default;
};

struct TermNode {
  std::variant<ConstantTerm, VariableTerm, NegateTerm, BinaryTerm, PowerTerm> v;
};

// ------------------------------------------------------------- formulas

enum class Relation { Le, Lt, Eq, Gt, Ge };
enum class Connective { And, Or, Implies };
enum class Quantifier { Forall, Exists };

struct TruthFormula {
  bool value;
  bool operator==(const TruthFormula&) const = default;
};
struct ComparisonFormula {
  Term lhs;
  Relation rel;
  Term rhs;
  bool operator==(const ComparisonFormula&) const = default;
};
struct NotFormula {
  Formula operand;
  bool operator==(const NotFormula&) const = default;
};
struct ConnectiveFormula {
  Connective op;
  Formula lhs;
  Formula rhs;
  bool operator==(const ConnectiveFormula&) const = default;
};
struct QuantifiedFormula {
  Quantifier kind;
  std::string var;
  Formula body;
  bool operator==(const QuantifiedFormula&) const = default;
};
/// [program] post
struct BoxFormula {
  Program program;
  Formula post;
  bool operator==(const BoxFormula&) const = default;
};

struct FormulaNode {
  std::variant<TruthFormula, ComparisonFormula, NotFormula, ConnectiveFormula, QuantifiedFormula,
               BoxFormula>
      v;
};

// ------------------------------------------------------------- programs

struct AssignProgram {
  std::string var;
  Term value;
  bool operator==(const AssignProgram&) const = default;
};
struct AssignAnyProgram {
  std::string var;
  bool operator==(const AssignAnyProgram&) const = default;
};
struct TestProgram {
  Formula condition;
  bool operator==(const TestProgram&) const = default;
};
struct SeqProgram {
  Program first;
  Program second;
  bool operator==(const SeqProgram&) const = default;
};
struct ChoiceProgram {
  Program lhs;
  Program rhs;
  bool operator==(const ChoiceProgram&) const = default;
};
struct LoopProgram {
  Program body;
  bool operator==(const LoopProgram&) const = default;
};
struct OdeEquation {
  std::string var;
  Term rhs;
  bool operator==(const OdeEquation&) const = default;
};
struct OdeProgram {
  std::vector<OdeEquation> equations;
  Formula domain;
  bool operator==(const OdeProgram&) const = default;
};

struct ProgramNode {
  std::variant<AssignProgram, AssignAnyProgram, TestProgram, SeqProgram, ChoiceProgram, LoopProgram,
               OdeProgram>
      v;
};

// --------------------------------------------------------- construction

Term constant(double value);
Term var(std::string name);
Term operator-(const Term& t);
Term operator+(const Term& a, const Term& b);
Term operator-(const Term& a, const Term& b);
Term operator*(const Term& a, const Term& b);
Term power(const Term& base, unsigned exponent);

Formula truth(bool value);
Formula compare(const Term& lhs, Relation rel, const Term& rhs);
Formula operator!(const Formula& f);
Formula operator&&(const Formula& a, const Formula& b);
Formula operator||(const Formula& a, const Formula& b);
Formula implies(const Formula& a, const Formula& b);
Formula quantify(Quantifier kind, std::string var, const Formula& body);
Formula box(const Program& program, const Formula& post);

Program assign(std::string var, const Term& value);
Program assign_any(std::string var);
Program test(const Formula& condition);
Program seq(const Program& first, const Program& second);
Program choice(const Program& lhs, const Program& rhs);
Program loop(const Program& body);
/// Throws std::invalid_argument when the equation list is empty or repeats a variable.
Program ode(std::vector<OdeEquation> equations, const Formula& domain = truth(true));

/// Valid identifier: [a-zA-Z][a-zA-Z0-9_]* and not a reserved word.
bool is_identifier(std::string_view name);
bool is_reserved_word(std::string_view name);

// -------------------------------------------------------------- queries

template <class T>
const T* as(const Term& t) {
  return std::get_if<T>(&t.node().v);
}
template <class T>
const T* as(const Formula& f) {
  return std::get_if<T>(&f.node().v);
}
template <class T>
const T* as(const Program& p) {
  return std::get_if<T>(&p.node().v);
}

}  // namespace hpshield
