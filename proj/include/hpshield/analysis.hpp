#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hpshield/ast.hpp"

namespace hpshield {

using VariableSet = std::set<std::string, std::less<>>;

/// Every variable name occurring in the tree (read, written, bound or primed).
VariableSet variables(const Term& t);
VariableSet variables(const Formula& f);
VariableSet variables(const Program& p);

/// Replace free occurrences of variables by terms. Quantifiers shadow their
/// bound variable; inside programs only term positions are rewritten, the
/// assigned variables are left alone.
using Substitution = std::map<std::string, Term, std::less<>>;
Term substitute(const Term& t, const Substitution& sub);
Formula substitute(const Formula& f, const Substitution& sub);
Program substitute(const Program& p, const Substitution& sub);

/// Negation normal form over comparisons, &, |: implications are expanded and
/// negations pushed into the relations. Throws EvalError(UnsupportedConnective)
/// for quantifiers and boxes.
Formula negation_normal_form(const Formula& f);

/// Left-nested conjunction; empty input gives true.
Formula conjunction(const std::vector<Formula>& parts);

/// True when the formula contains no quantifier and no box.
bool is_first_order_free(const Formula& f);

/// Leaves of a maximal nondeterministic-choice tree, left to right.
std::vector<Program> choice_branches(const Program& p);

/// Statements of a sequential composition, left to right.
std::vector<Program> sequence_items(const Program& p);

}  // namespace hpshield
