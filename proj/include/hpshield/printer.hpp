#pragma once

#include <string>

#include "hpshield/ast.hpp"

namespace hpshield {

// Canonical ASCII rendering. Output reparses to a structurally equal tree:
// parentheses and braces are emitted exactly where the grammar needs them and
// constants use the shortest round-trip decimal form.
std::string print_term(const Term& t);
std::string print_formula(const Formula& f);
std::string print_program(const Program& p);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace hpshield
