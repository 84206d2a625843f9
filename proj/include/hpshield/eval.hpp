#pragma once

#include "hpshield/ast.hpp"
#include "hpshield/state.hpp"

namespace hpshield {

/// Real-arithmetic value of `t` in `s`. Throws EvalError on unbound variables
/// and non-finite intermediate results.
double eval_term(const Term& t, const State& s);

/// Truth of a quantifier- and modality-free formula. Comparisons are exact IEEE
/// comparisons. Quantifiers and boxes raise EvalError(UnsupportedConnective).
bool eval_formula(const Formula& f, const State& s);

/// Signed satisfaction margin of a quantifier- and modality-free formula.
///
/// The formula is first put in negation normal form. An atom f <= g scores
/// g - f (likewise for <, >=, >), f = g scores -|f - g|, conjunctions take the
/// minimum and disjunctions the maximum; true and false score +inf and -inf.
/// The margin is positive exactly when the formula holds, except on the
/// boundary of strict and equality atoms.
double robustness(const Formula& f, const State& s);

/// Integer power by repeated squaring. Shared by every evaluator so that all
/// evaluation routes agree to the bit.
double int_power(double base, unsigned exponent);

}  // namespace hpshield
