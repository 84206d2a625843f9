#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hpshield/ast.hpp"

namespace hpshield {

/// Half-open byte range [start, end) into the parsed text.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const SourceSpan&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceSpan span, const std::string& message)
      : std::runtime_error(message), span_(span) {}
  SourceSpan span() const { return span_; }

 private:
  SourceSpan span_;
};

// ASCII surface syntax
//
//   terms     c | x | -t | t+t | t-t | t*t | t^n | (t)
//   formulas  true | false | t ~ t | !f | f & f | f | f | f -> f
//             | forall x. f | exists x. f | [prog] f | (f)
//             with ~ one of <= < = > >=
//   programs  x := t | x := * | ?f | a; b | a ++ b | {a}* | {a}
//             | {x'=t, y'=t & f}
//
// Binding strength, tightest first: for terms ^, unary -, *, then + and -; for
// formulas comparisons, then !/quantifiers/box, &, |, and the right-associative
// ->; for programs ; then ++. The Unicode forms of the connectives (for example
// the union and comparison symbols) are accepted as aliases. A trailing ';' is
// allowed before '}', ']', '++' and end of input.
//
// Every parse either returns a tree or throws ParseError whose span lies within
// the input.
Program parse_program(std::string_view text);
Formula parse_formula(std::string_view text);
Term parse_term(std::string_view text);

}  // namespace hpshield
