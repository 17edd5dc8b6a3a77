#include "rap/kernel.hpp"

#include <cctype>
#include <sstream>

namespace rap {
namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_cont(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

// ---------------------------------------------------------------------------
// Formula parsing

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : text_(text) {}

  FormulaPtr parse_full() {
    FormulaPtr f = parse_impl();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

  // impl := disj ("->" impl)?   (right-assoc, loosest)
  FormulaPtr parse_impl() {
    FormulaPtr lhs = parse_disj();
    skip_ws();
    if (try_consume("->")) return Formula::impl(std::move(lhs), parse_impl());
    return lhs;
  }

  std::size_t pos() const { return pos_; }

 private:
  // disj := conj ("\/" conj)*   (left-assoc)
  FormulaPtr parse_disj() {
    FormulaPtr lhs = parse_conj();
    while (true) {
      skip_ws();
      if (!try_consume("\\/")) return lhs;
      lhs = Formula::disj(std::move(lhs), parse_conj());
    }
  }

  // conj := primary ("/\" primary)*   (left-assoc, tightest binary)
  FormulaPtr parse_conj() {
    FormulaPtr lhs = parse_primary();
    while (true) {
      skip_ws();
      if (!try_consume("/\\")) return lhs;
      lhs = Formula::conj(std::move(lhs), parse_primary());
    }
  }

  FormulaPtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected formula");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      FormulaPtr inner = parse_impl();
      skip_ws();
      if (!try_consume(")")) fail("expected ')'");
      return inner;
    }
    if (is_ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_ident_cont(text_[pos_])) ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      if (name == "True") return Formula::truth();
      return Formula::atom(std::move(name));
    }
    fail("expected formula");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool try_consume(std::string_view tok) {
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ParseError("syntax error at offset " + std::to_string(pos_) + ": " + what, pos_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Precedence for printing: higher binds tighter.
int prec(Formula::Kind k) {
  switch (k) {
    case Formula::Kind::impl: return 1;
    case Formula::Kind::disj: return 2;
    case Formula::Kind::conj: return 3;
    default: return 4;
  }
}

void print(const Formula& f, std::string& out) {
  auto child = [&out](const FormulaPtr& c, int parent_prec, bool assoc_side_ok) {
    bool parens = prec(c->kind()) < parent_prec || (prec(c->kind()) == parent_prec && !assoc_side_ok);
    if (parens) out += '(';
    print(*c, out);
    if (parens) out += ')';
  };
  switch (f.kind()) {
    case Formula::Kind::atom: out += f.name(); return;
    case Formula::Kind::truth: out += "True"; return;
    case Formula::Kind::impl:  // right-assoc
      child(f.lhs(), prec(f.kind()), false);
      out += " -> ";
      child(f.rhs(), prec(f.kind()), true);
      return;
    case Formula::Kind::disj:  // left-assoc
      child(f.lhs(), prec(f.kind()), true);
      out += " \\/ ";
      child(f.rhs(), prec(f.kind()), false);
      return;
    case Formula::Kind::conj:
      child(f.lhs(), prec(f.kind()), true);
      out += " /\\ ";
      child(f.rhs(), prec(f.kind()), false);
      return;
  }
}

// ---------------------------------------------------------------------------
// Tactic parsing: NAME. or NAME IDENT.

struct ParsedTactic {
  std::string head;
  std::string arg;  // empty when absent
};

bool parse_tactic_text(const std::string& text, ParsedTactic& out, std::string& err) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  if (begin == end) {
    err = "empty tactic";
    return false;
  }
  if (text[end - 1] != '.') {
    err = "tactic must end with '.'";
    return false;
  }
  std::string body = text.substr(begin, end - begin - 1);
  std::istringstream in(body);
  std::string head, arg, extra;
  in >> head >> arg >> extra;
  if (head.empty() || !extra.empty()) {
    err = "malformed tactic '" + body + "'";
    return false;
  }
  out.head = head;
  out.arg = arg;
  return true;
}

const Hypothesis* find_hyp(const Goal& goal, const std::string& name) {
  for (const auto& h : goal.hypotheses)
    if (h.name == name) return &h;
  return nullptr;
}

// Replaces goals.front() with `replacements` (prepended, order kept).
KernelState replace_focused(const KernelState& state, std::vector<Goal> replacements) {
  KernelState next;
  next.goals = std::move(replacements);
  next.goals.insert(next.goals.end(), state.goals.begin() + 1, state.goals.end());
  return next;
}

CheckResult finish(KernelState next) {
  if (next.complete()) return CheckResult::make_complete();
  return CheckResult::make_incomplete(std::move(next));
}

}  // namespace

FormulaPtr Formula::atom(std::string name) {
  return FormulaPtr(new Formula(Kind::atom, std::move(name), nullptr, nullptr));
}
FormulaPtr Formula::truth() { return FormulaPtr(new Formula(Kind::truth, "", nullptr, nullptr)); }
FormulaPtr Formula::conj(FormulaPtr lhs, FormulaPtr rhs) {
  return FormulaPtr(new Formula(Kind::conj, "", std::move(lhs), std::move(rhs)));
}
FormulaPtr Formula::disj(FormulaPtr lhs, FormulaPtr rhs) {
  return FormulaPtr(new Formula(Kind::disj, "", std::move(lhs), std::move(rhs)));
}
FormulaPtr Formula::impl(FormulaPtr lhs, FormulaPtr rhs) {
  return FormulaPtr(new Formula(Kind::impl, "", std::move(lhs), std::move(rhs)));
}

bool Formula::equals(const Formula& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::atom: return name_ == other.name_;
    case Kind::truth: return true;
    default: return lhs_->equals(*other.lhs_) && rhs_->equals(*other.rhs_);
  }
}

std::string Formula::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

FormulaPtr parse_formula(std::string_view text) { return FormulaParser(text).parse_full(); }

Goal parse_goal(std::string_view text) {
  Goal goal;
  std::size_t turnstile = text.find("|-");
  std::string_view target_part = text;
  if (turnstile != std::string_view::npos) {
    std::string_view hyp_part = text.substr(0, turnstile);
    target_part = text.substr(turnstile + 2);
    // Hypotheses: name ":" formula ("," name ":" formula)*
    std::size_t pos = 0;
    while (true) {
      while (pos < hyp_part.size() && std::isspace(static_cast<unsigned char>(hyp_part[pos]))) ++pos;
      if (pos >= hyp_part.size()) break;
      std::size_t start = pos;
      while (pos < hyp_part.size() && is_ident_cont(hyp_part[pos])) ++pos;
      if (pos == start) throw ParseError("expected hypothesis name", start);
      std::string name(hyp_part.substr(start, pos - start));
      while (pos < hyp_part.size() && std::isspace(static_cast<unsigned char>(hyp_part[pos]))) ++pos;
      if (pos >= hyp_part.size() || hyp_part[pos] != ':')
        throw ParseError("expected ':' after hypothesis name", pos);
      ++pos;
      // formula runs to the next top-level ','
      int depth = 0;
      std::size_t fstart = pos;
      while (pos < hyp_part.size() && !(depth == 0 && hyp_part[pos] == ',')) {
        if (hyp_part[pos] == '(') ++depth;
        if (hyp_part[pos] == ')') --depth;
        ++pos;
      }
      FormulaPtr f = parse_formula(hyp_part.substr(fstart, pos - fstart));
      for (const auto& h : goal.hypotheses)
        if (h.name == name) throw ParseError("duplicate hypothesis '" + name + "'", fstart);
      goal.hypotheses.push_back({std::move(name), std::move(f)});
      if (pos < hyp_part.size() && hyp_part[pos] == ',') ++pos;
    }
  }
  goal.target = parse_formula(target_part);
  return goal;
}

CheckResult CheckResult::make_complete() {
  CheckResult r;
  r.status = Status::complete;
  return r;
}
CheckResult CheckResult::make_invalid(std::string message) {
  CheckResult r;
  r.status = Status::invalid;
  r.message = std::move(message);
  return r;
}
CheckResult CheckResult::make_incomplete(KernelState next) {
  CheckResult r;
  r.status = Status::incomplete;
  r.next = std::move(next);
  return r;
}

CheckResult apply_tactic(const KernelState& state, const std::string& tactic_text) {
  if (state.complete()) return CheckResult::make_invalid("no goals left");

  ParsedTactic tac;
  std::string err;
  if (!parse_tactic_text(tactic_text, tac, err)) return CheckResult::make_invalid(err);

  const Goal& goal = state.goals.front();
  const Formula& target = *goal.target;

  if (tac.head == "intro") {
    if (tac.arg.empty()) return CheckResult::make_invalid("intro needs a hypothesis name");
    if (target.kind() != Formula::Kind::impl)
      return CheckResult::make_invalid("intro: target is not an implication");
    if (find_hyp(goal, tac.arg))
      return CheckResult::make_invalid("intro: name '" + tac.arg + "' already used");
    Goal next = goal;
    next.hypotheses.push_back({tac.arg, target.lhs()});
    next.target = target.rhs();
    return finish(replace_focused(state, {std::move(next)}));
  }
  if (tac.head == "split") {
    if (!tac.arg.empty()) return CheckResult::make_invalid("split takes no argument");
    if (target.kind() != Formula::Kind::conj)
      return CheckResult::make_invalid("split: target is not a conjunction");
    Goal left_goal = goal, right_goal = goal;
    left_goal.target = target.lhs();
    right_goal.target = target.rhs();
    return finish(replace_focused(state, {std::move(left_goal), std::move(right_goal)}));
  }
  if (tac.head == "left" || tac.head == "right") {
    if (!tac.arg.empty()) return CheckResult::make_invalid(tac.head + " takes no argument");
    if (target.kind() != Formula::Kind::disj)
      return CheckResult::make_invalid(tac.head + ": target is not a disjunction");
    Goal next = goal;
    next.target = tac.head == "left" ? target.lhs() : target.rhs();
    return finish(replace_focused(state, {std::move(next)}));
  }
  if (tac.head == "assumption") {
    if (!tac.arg.empty()) return CheckResult::make_invalid("assumption takes no argument");
    for (const auto& h : goal.hypotheses)
      if (h.formula->equals(target)) return finish(replace_focused(state, {}));
    return CheckResult::make_invalid("assumption: no hypothesis matches the target");
  }
  if (tac.head == "exact") {
    if (tac.arg.empty()) return CheckResult::make_invalid("exact needs a hypothesis name");
    const Hypothesis* h = find_hyp(goal, tac.arg);
    if (!h) return CheckResult::make_invalid("exact: unknown hypothesis '" + tac.arg + "'");
    if (!h->formula->equals(target))
      return CheckResult::make_invalid("exact: hypothesis does not match the target");
    return finish(replace_focused(state, {}));
  }
  if (tac.head == "apply") {
    if (tac.arg.empty()) return CheckResult::make_invalid("apply needs a hypothesis name");
    const Hypothesis* h = find_hyp(goal, tac.arg);
    if (!h) return CheckResult::make_invalid("apply: unknown hypothesis '" + tac.arg + "'");
    // Peel H : A1 -> ... -> An -> T until the suffix equals the target; the
    // premises A1..An become subgoals (smallest n wins, n >= 1).
    std::vector<FormulaPtr> premises;
    FormulaPtr suffix = h->formula;
    while (suffix->kind() == Formula::Kind::impl) {
      premises.push_back(suffix->lhs());
      suffix = suffix->rhs();
      if (suffix->equals(target)) {
        std::vector<Goal> subgoals;
        for (const auto& p : premises) {
          Goal g = goal;
          g.target = p;
          subgoals.push_back(std::move(g));
        }
        return finish(replace_focused(state, std::move(subgoals)));
      }
    }
    return CheckResult::make_invalid("apply: conclusion of '" + tac.arg +
                                     "' does not match the target");
  }
  if (tac.head == "trivial") {
    if (!tac.arg.empty()) return CheckResult::make_invalid("trivial takes no argument");
    if (target.kind() != Formula::Kind::truth)
      return CheckResult::make_invalid("trivial: target is not True");
    return finish(replace_focused(state, {}));
  }
  return CheckResult::make_invalid("unknown tactic '" + tac.head + "'");
}

CheckResult check_script(const Goal& theorem, const std::vector<std::string>& tactics) {
  KernelState state;
  state.goals = {theorem};
  for (std::size_t i = 0; i < tactics.size(); ++i) {
    CheckResult r = apply_tactic(state, tactics[i]);
    if (r.status == CheckResult::Status::invalid) return r;
    if (r.status == CheckResult::Status::complete) {
      // A tactic after the closing one would hit the empty state.
      if (i + 1 < tactics.size()) return CheckResult::make_invalid("no goals left");
      return r;
    }
    state = std::move(r.next);
  }
  return CheckResult::make_incomplete(std::move(state));
}

std::string render_state_text(const KernelState& state) {
  if (state.complete()) return "No more goals.";
  std::string out;
  for (std::size_t i = 0; i < state.goals.size(); ++i) {
    if (i) out += "\n\n";
    out += "Goal " + std::to_string(i + 1) + " of " + std::to_string(state.goals.size()) + "\n";
    for (const auto& h : state.goals[i].hypotheses)
      out += h.name + " : " + h.formula->to_string() + "\n";
    out += "=====\n";
    out += state.goals[i].target->to_string();
  }
  return out;
}

ProofState render_state(const KernelState& state, int step_index) {
  return ProofState{render_state_text(state), step_index};
}

}  // namespace rap
