#pragma once

// Slot-compiled forms of terms, formulas and programs.
//
// Variables are resolved once to indices into a flat vector of doubles; an
// unbound variable is a NaN slot. The arithmetic performed is operation-for-
// operation the same as eval_term/eval_formula, so results agree to the bit.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "hpshield/ast.hpp"
#include "hpshield/state.hpp"

namespace hpshield::detail {

constexpr double kUnbound = std::numeric_limits<double>::quiet_NaN();

class Layout {
 public:
  int slot(const std::string& name);
  int find(const std::string& name) const;
  const std::string& name(int slot) const { return names_[static_cast<std::size_t>(slot)]; }
  std::size_t size() const { return names_.size(); }

  std::vector<double> load(const State& s);
  State store(const std::vector<double>& slots) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

class CompiledTerm {
 public:
  CompiledTerm() = default;
  CompiledTerm(const Term& t, Layout& layout);
  double eval(const std::vector<double>& slots, const Layout& layout) const;

 private:
  enum class Op : std::uint8_t { Const, Load, Neg, Add, Sub, Mul, Pow };
  struct Instr {
    Op op;
    std::uint32_t arg;  // slot index or exponent
    double value;
  };
  void emit(const Term& t, Layout& layout, int depth);

  std::vector<Instr> code_;
  int max_stack_ = 0;
};

class CompiledFormula {
 public:
  CompiledFormula() = default;
  CompiledFormula(const Formula& f, Layout& layout);
  bool eval(const std::vector<double>& slots, const Layout& layout) const;

 private:
  enum class Kind : std::uint8_t { Truth, Compare, Not, And, Or, Implies, Unsupported };
  struct Node {
    Kind kind;
    bool value = false;
    Relation rel = Relation::Eq;
    int lhs = -1;  // child node, or term index for comparisons
    int rhs = -1;
    std::string what;
  };
  int build(const Formula& f, Layout& layout);
  bool eval_node(int node, const std::vector<double>& slots, const Layout& layout) const;

  std::vector<Node> nodes_;
  std::vector<CompiledTerm> terms_;
  int root_ = -1;
};

struct FlowOutcome {
  double elapsed = 0;
  bool domain_exit = false;
};

struct FlowSettings {
  double step = 1e-3;
  double event_tolerance = 1e-9;
  std::size_t record_every = 0;
};

/// Compiled system of differential equations with its evolution domain.
class CompiledOde {
 public:
  CompiledOde(const OdeProgram& ode, Layout& layout);

  bool domain_holds(const std::vector<double>& slots, const Layout& layout) const {
    return domain_.eval(slots, layout);
  }

  /// Fixed-step RK4 from `slots` for up to `duration`, stopping at the last
  /// domain-satisfying point when the domain fails. `slots` is updated in place.
  /// The caller checks the domain at the start.
  FlowOutcome flow(std::vector<double>& slots, const Layout& layout, double duration,
                   const FlowSettings& settings,
                   std::vector<std::pair<double, std::vector<double>>>* trajectory = nullptr) const;

 private:
  void rk4_step(const std::vector<double>& from, double h, std::vector<double>& to,
                const Layout& layout) const;
  void derivatives(const std::vector<double>& slots, const Layout& layout, std::vector<double>& out) const;

  std::vector<int> vars_;
  std::vector<CompiledTerm> rhs_;
  CompiledFormula domain_;
  mutable std::vector<double> k1_, k2_, k3_, k4_, scratch_;
};

/// Program flattened into nodes: sequences and choices become n-ary.
struct CompiledProgram {
  enum class Kind : std::uint8_t { Assign, AssignAny, Test, Seq, Choice, Loop, Ode };
  struct Node {
    Kind kind;
    int var = -1;
    std::vector<int> children;
    int term = -1;     // index into terms
    int formula = -1;  // index into formulas
    int ode = -1;      // index into odes
    Program source;
  };

  CompiledProgram(const Program& p, Layout& layout);

  std::vector<Node> nodes;
  std::vector<CompiledTerm> terms;
  std::vector<CompiledFormula> formulas;
  std::vector<CompiledOde> odes;
  int root = -1;

 private:
  int build(const Program& p, Layout& layout);
};

}  // namespace hpshield::detail
