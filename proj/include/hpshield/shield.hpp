#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hpshield/ast.hpp"
#include "hpshield/flow.hpp"
#include "hpshield/state.hpp"

namespace hpshield {

class ShieldError : public std::runtime_error {
 public:
  enum class Kind { NotCanonicalForm, UnknownAction, InvalidFallback, InvalidParams, InsufficientData, EmptyWindow };

  ShieldError(Kind kind, std::string subject, const std::string& message)
      : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}
  Kind kind() const { return kind_; }
  /// Offending node text, action id or parameter name.
  const std::string& subject() const { return subject_; }

 private:
  Kind kind_;
  std::string subject_;
};

struct GuardEntry {
  std::string action;
  std::vector<std::pair<std::string, Term>> assignments;
  Formula guard;
};

/// Admissibility conditions of a controller's actions. Immutable; action ids
/// are unique and the fallback's guard is `true`.
class GuardTable {
 public:
  /// Throws ShieldError(InvalidFallback) for a missing fallback or one whose
  /// guard is not `true`, std::invalid_argument for duplicate or empty ids.
  GuardTable(std::vector<GuardEntry> entries, std::string fallback);

  const std::vector<GuardEntry>& entries() const { return entries_; }
  const std::string& fallback() const { return fallback_; }
  const GuardEntry* find(const std::string& action) const;
  /// Throws ShieldError(UnknownAction).
  const GuardEntry& at(const std::string& action) const;
  std::vector<std::string> actions() const;

  bool operator==(const GuardTable&) const;

 private:
  std::vector<GuardEntry> entries_;
  std::string fallback_;
};

/// Table of a controller in guarded-choice form: a choice tree whose branches
/// are sequences of tests followed by assignments. Branches are labelled from
/// `labels` when given (one per branch), otherwise `branch_<k>`.
GuardTable extract_guards(const Program& controller, const std::string& fallback,
                          const std::vector<std::string>& labels = {});

/// The controller again: one guarded branch per entry.
Program controller_program(const GuardTable& table);

/// `.hp` text of the table. Entry and fallback names travel in comments
/// (`// fallback: <id>`, `// action: <id>`), so the text also parses as a
/// plain program.
std::string print_guard_table(const GuardTable& table);
/// Inverse of print_guard_table. Throws ParseError or ShieldError.
GuardTable parse_guard_table(std::string_view text);

struct ShieldDecision {
  std::string action;
  bool intervened = false;
  bool operator==(const ShieldDecision&) const = default;
};

/// Passes `proposed` when its guard's robustness is at least `margin`,
/// otherwise substitutes the fallback. Throws ShieldError(UnknownAction);
/// evaluation errors propagate.
ShieldDecision shield_action(const GuardTable& table, const State& s, const std::string& proposed,
                             double margin = 0);

/// Applies the entry's assignments in order. Throws ShieldError(UnknownAction).
State apply_action(const GuardTable& table, const State& s, const std::string& action);

/// Dynamics parameters of the stop-sign car: maximum acceleration A (m/s^2),
/// maximum braking b (m/s^2) and maximum control latency eps (s).
struct ModelParams {
  double A = 1;
  double b = 1;
  double eps = 1;

  /// Throws ShieldError(InvalidParams) unless A >= 0, b > 0, eps > 0.
  void validate() const;
  /// Writes A, b and eps into a state.
  void store(State& s) const;
  bool operator==(const ModelParams&) const = default;
};

struct TransitionRecord {
  State before;
  std::string action;
  State after;
  double elapsed = 0;
};

struct MismatchReport {
  bool flagged = false;
  std::map<std::string, double, std::less<>> residuals;  // max over the window, per variable
  double max_residual = 0;
  std::size_t window = 0;
};

constexpr double kDefaultMismatchThreshold = 3e-6;

/// Compares observed transitions with the model's prediction: for each record
/// the model parameters are written into the before-state, the action's
/// assignments applied and `plant` (for example `t := 0; {x'=v, ...}`) run
/// with its evolution lasting the record's elapsed time. Residuals are taken
/// over the variables governed by the plant's differential equations.
class MismatchDetector {
 public:
  MismatchDetector(GuardTable table, const Program& plant, FlowOptions flow = {});
  ~MismatchDetector();
  MismatchDetector(MismatchDetector&&) noexcept;
  MismatchDetector& operator=(MismatchDetector&&) noexcept;

  State predict(const TransitionRecord& record, const ModelParams& params) const;
  /// Throws ShieldError(EmptyWindow) for an empty window.
  MismatchReport check(std::span<const TransitionRecord> window, const ModelParams& params,
                       double threshold = kDefaultMismatchThreshold) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MismatchReport detect_mismatch(std::span<const TransitionRecord> window, const GuardTable& table,
                               const ModelParams& params, const Program& plant,
                               double threshold = kDefaultMismatchThreshold, const FlowOptions& flow = {});

struct EstimationSpec {
  std::string brake_action = "brake";
  std::string accel_action = "accel";
  std::string velocity = "v";
};

/// Per-action constant-acceleration least squares through the origin:
/// a_k = sum(dt * dv) / sum(dt^2) over the action's records; b = -a_brake,
/// A = a_accel, eps = largest elapsed time. Records with elapsed <= 0 are
/// ignored. Throws ShieldError(InsufficientData) naming the action lacking data.
ModelParams estimate_params(std::span<const TransitionRecord> records, const EstimationSpec& spec = {});

/// Replaces the parameter symbols A, b, eps in every guard with the constants
/// A', factor*b', eps' from `updated`. Assignments and the fallback are kept.
/// Throws ShieldError(InvalidParams) for invalid parameters or a factor
/// outside (0, 1].
GuardTable resynthesize_guards(const GuardTable& table, const ModelParams& old_params,
                               const ModelParams& updated, double safety_factor = 0.9);

/// CSV with columns before_<var>..., action, after_<var>..., dt over the union
/// of variables in the records (sorted).
void write_transitions_csv(std::ostream& out, std::span<const TransitionRecord> records);

}  // namespace hpshield
