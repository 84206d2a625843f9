#include "hpshield/state.hpp"

#include <cmath>

#include "hpshield/printer.hpp"

namespace hpshield {

State::State(std::initializer_list<std::pair<const std::string, double>> init) {
  for (const auto& [name, value] : init) set(name, value);
}

std::optional<double> State::find(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double State::get(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw EvalError::unbound(std::string(name));
  return it->second;
}

void State::set(std::string_view name, double value) {
  if (!std::isfinite(value)) throw EvalError::non_finite("assignment to '" + std::string(name) + "'");
  auto it = values_.find(name);
  if (it == values_.end()) {
    values_.emplace(std::string(name), value);
  } else {
    it->second = value;
  }
}

void State::erase(std::string_view name) {
  auto it = values_.find(name);
  if (it != values_.end()) values_.erase(it);
}

std::string to_string(const State& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, value] : s.values()) {
    if (!first) out += ", ";
    first = false;
    out += name;
    out += ": ";
    out += format_number(value);
  }
  out += "}";
  return out;
}

}  // namespace hpshield
