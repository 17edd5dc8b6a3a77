#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rap/corpus.hpp"

namespace rap {

// Propositional formulas. '->' is right-associative and binds loosest, then
// '\/', then '/\'; atoms, True and parenthesised formulas are primaries.
class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class Formula {
 public:
  enum class Kind { atom, truth, conj, disj, impl };

  static FormulaPtr atom(std::string name);
  static FormulaPtr truth();
  static FormulaPtr conj(FormulaPtr lhs, FormulaPtr rhs);
  static FormulaPtr disj(FormulaPtr lhs, FormulaPtr rhs);
  static FormulaPtr impl(FormulaPtr lhs, FormulaPtr rhs);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }  // atoms only
  const FormulaPtr& lhs() const { return lhs_; }
  const FormulaPtr& rhs() const { return rhs_; }

  bool equals(const Formula& other) const;  // structural
  std::string to_string() const;            // canonical spacing, minimal parens

 private:
  Formula(Kind kind, std::string name, FormulaPtr lhs, FormulaPtr rhs)
      : kind_(kind), name_(std::move(name)), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

  Kind kind_;
  std::string name_;
  FormulaPtr lhs_, rhs_;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset(offset) {}
  std::size_t offset;
};

// Throws ParseError with the failing offset.
FormulaPtr parse_formula(std::string_view text);

struct Hypothesis {
  std::string name;
  FormulaPtr formula;
};

struct Goal {
  std::vector<Hypothesis> hypotheses;
  FormulaPtr target;
};

// "H : A, H2 : B |- C" or a bare formula (no hypotheses). Hypothesis names
// must be distinct.
Goal parse_goal(std::string_view text);

// The focused goal is goals.front(); new subgoals are prepended.
struct KernelState {
  std::vector<Goal> goals;
  bool complete() const { return goals.empty(); }
};

struct CheckResult {
  enum class Status { complete, invalid, incomplete };

  Status status = Status::invalid;
  std::string message;  // set for invalid
  KernelState next;     // set for incomplete

  static CheckResult make_complete();
  static CheckResult make_invalid(std::string message);
  static CheckResult make_incomplete(KernelState next);
};

// Total: malformed or inapplicable tactics yield Invalid, never an exception.
// Tactics: intro NAME. | split. | left. | right. | assumption. | exact NAME. |
// apply NAME. | trivial.
CheckResult apply_tactic(const KernelState& state, const std::string& tactic_text);

// Folds apply_tactic over the script, short-circuiting on Invalid. Complete
// only if no goal is left after the final tactic.
CheckResult check_script(const Goal& theorem, const std::vector<std::string>& tactics);

// "Goal k of n" header per goal, one "name : formula" line per hypothesis, a
// "=====" separator, then the target; goals separated by a blank line. The
// empty state renders as "No more goals."
std::string render_state_text(const KernelState& state);
ProofState render_state(const KernelState& state, int step_index = 0);

}  // namespace rap
