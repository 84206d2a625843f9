#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace hpshield {

class EvalError : public std::runtime_error {
 public:
  enum class Kind { UnboundVariable, NonFiniteResult, UnsupportedConnective, NonFiniteState };

  EvalError(Kind kind, std::string subject, const std::string& message)
      : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}

  Kind kind() const { return kind_; }
  /// Variable name for UnboundVariable, connective name for UnsupportedConnective.
  const std::string& subject() const { return subject_; }

  static EvalError unbound(const std::string& name) {
    return {Kind::UnboundVariable, name, "unbound variable '" + name + "'"};
  }
  static EvalError non_finite(const std::string& what) {
    return {Kind::NonFiniteResult, what, "non-finite result in " + what};
  }

 private:
  Kind kind_;
  std::string subject_;
};

/// Assignment of finite real values to variable names.
class State {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  State() = default;
  State(std::initializer_list<std::pair<const std::string, double>> init);

  bool has(std::string_view name) const { return values_.find(name) != values_.end(); }
  std::optional<double> find(std::string_view name) const;
  /// Throws EvalError(UnboundVariable).
  double get(std::string_view name) const;
  /// Throws EvalError(NonFiniteResult) for NaN or infinity.
  void set(std::string_view name, double value);
  void erase(std::string_view name);

  const Map& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const State&) const = default;

 private:
  Map values_;
};

std::string to_string(const State& s);

}  // namespace hpshield
