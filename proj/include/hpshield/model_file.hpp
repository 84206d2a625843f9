#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hpshield/ast.hpp"

namespace hpshield {

/// A safety model `init -> [program] safe`.
///
/// File format: three labelled sections in any order,
///
///   init:    <formula>
///   program: <program>
///   safe:    <formula>
///
/// each running to the next label. `//` starts a comment. A label is one of the
/// three words at the start of a line followed by a colon.
struct SafetyModel {
  Formula init;
  Program program;
  Formula safe;

  Formula as_formula() const { return implies(init, box(program, safe)); }
};

/// Throws ParseError with spans relative to `text`.
SafetyModel parse_model(std::string_view text);

/// Throws std::runtime_error when the file cannot be read, ParseError (with the
/// file name in the message) on syntax errors.
SafetyModel load_model(const std::filesystem::path& path);

std::string print_model(const SafetyModel& model);

}  // namespace hpshield
