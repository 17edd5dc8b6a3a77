#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include <rap/kernel.hpp>

using namespace rap;

namespace {

KernelState state_of(const std::string& goal_text) {
  return KernelState{{parse_goal(goal_text)}};
}

// Random formula trees for round-trip and fuzz properties.
FormulaPtr random_formula(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
  switch (pick(rng)) {
    case 0: {
      static const char* atoms[] = {"A", "B", "C", "x'", "foo_1", "Q"};
      return Formula::atom(atoms[rng() % 6]);
    }
    case 1: return Formula::truth();
    case 2: return Formula::conj(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    case 3: return Formula::disj(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    default: return Formula::impl(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("formula parsing: precedence and associativity") {
  // -> binds loosest and associates right.
  CHECK(parse_formula("A -> B -> A")->to_string() == "A -> B -> A");
  const FormulaPtr imp = parse_formula("A -> B -> A");
  REQUIRE(imp->kind() == Formula::Kind::impl);
  CHECK(imp->lhs()->to_string() == "A");
  CHECK(imp->rhs()->to_string() == "B -> A");

  // /\ binds tighter than \/; both associate left.
  const FormulaPtr mixed = parse_formula("A /\\ B \\/ C");
  REQUIRE(mixed->kind() == Formula::Kind::disj);
  CHECK(mixed->lhs()->to_string() == "A /\\ B");
  CHECK(mixed->rhs()->to_string() == "C");

  CHECK(parse_formula("A /\\ B /\\ C")->lhs()->to_string() == "A /\\ B");
  CHECK(parse_formula("A \\/ B \\/ C")->lhs()->to_string() == "A \\/ B");

  // Parentheses force the non-default shape and are kept by the printer.
  CHECK(parse_formula("(A -> B) -> C")->to_string() == "(A -> B) -> C");
  CHECK(parse_formula("A /\\ (B \\/ C)")->to_string() == "A /\\ (B \\/ C)");
  CHECK(parse_formula("(A)")->to_string() == "A");
  CHECK(parse_formula("True")->kind() == Formula::Kind::truth);
}

TEST_CASE("formula parsing: errors carry the failing offset") {
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("A ->"), ParseError);
  CHECK_THROWS_AS(parse_formula("A B"), ParseError);
  CHECK_THROWS_AS(parse_formula("/\\ A"), ParseError);
  try {
    parse_formula("A -> (");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 6);
  }
}

TEST_CASE("formula round-trip: parse(to_string(f)) == f") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 500; ++i) {
    const FormulaPtr f = random_formula(rng, 4);
    const FormulaPtr back = parse_formula(f->to_string());
    CHECK(back->equals(*f));
  }
}

TEST_CASE("goal parsing") {
  const Goal bare = parse_goal("A -> A");
  CHECK(bare.hypotheses.empty());
  CHECK(bare.target->to_string() == "A -> A");

  const Goal with_hyps = parse_goal("H : A -> B, H2 : A |- B");
  REQUIRE(with_hyps.hypotheses.size() == 2);
  CHECK(with_hyps.hypotheses[0].name == "H");
  CHECK(with_hyps.hypotheses[0].formula->to_string() == "A -> B");
  CHECK(with_hyps.hypotheses[1].name == "H2");
  CHECK(with_hyps.target->to_string() == "B");

  CHECK_THROWS_AS(parse_goal("H : A, H : B |- A"), ParseError);  // duplicate name
  CHECK_THROWS_AS(parse_goal("H : A |-"), ParseError);
}

TEST_CASE("tactic: intro") {
  const CheckResult r = apply_tactic(state_of("A -> B"), "intro H.");
  REQUIRE(r.status == CheckResult::Status::incomplete);
  REQUIRE(r.next.goals.size() == 1);
  CHECK(r.next.goals[0].hypotheses.size() == 1);
  CHECK(r.next.goals[0].hypotheses[0].name == "H");
  CHECK(r.next.goals[0].hypotheses[0].formula->to_string() == "A");
  CHECK(r.next.goals[0].target->to_string() == "B");

  CHECK(apply_tactic(state_of("A /\\ B"), "intro H.").status == CheckResult::Status::invalid);
  // Name collision is rejected.
  KernelState taken{{parse_goal("H : A |- A -> B")}};
  CHECK(apply_tactic(taken, "intro H.").status == CheckResult::Status::invalid);
}

TEST_CASE("tactic: split, left, right") {
  const CheckResult split = apply_tactic(state_of("A /\\ B"), "split.");
  REQUIRE(split.status == CheckResult::Status::incomplete);
  REQUIRE(split.next.goals.size() == 2);
  CHECK(split.next.goals[0].target->to_string() == "A");
  CHECK(split.next.goals[1].target->to_string() == "B");

  const CheckResult left = apply_tactic(state_of("A \\/ B"), "left.");
  REQUIRE(left.status == CheckResult::Status::incomplete);
  CHECK(left.next.goals[0].target->to_string() == "A");

  const CheckResult right = apply_tactic(state_of("A \\/ B"), "right.");
  REQUIRE(right.status == CheckResult::Status::incomplete);
  CHECK(right.next.goals[0].target->to_string() == "B");

  CHECK(apply_tactic(state_of("A \\/ B"), "split.").status == CheckResult::Status::invalid);
  CHECK(apply_tactic(state_of("A /\\ B"), "left.").status == CheckResult::Status::invalid);
}

TEST_CASE("tactic: assumption, exact, trivial") {
  KernelState ab{{parse_goal("H : A, H2 : B |- B")}};
  CHECK(apply_tactic(ab, "assumption.").status == CheckResult::Status::complete);
  CHECK(apply_tactic(ab, "exact H2.").status == CheckResult::Status::complete);
  CHECK(apply_tactic(ab, "exact H.").status == CheckResult::Status::invalid);
  CHECK(apply_tactic(ab, "exact nosuch.").status == CheckResult::Status::invalid);
  CHECK(apply_tactic(state_of("A"), "assumption.").status == CheckResult::Status::invalid);

  CHECK(apply_tactic(state_of("True"), "trivial.").status == CheckResult::Status::complete);
  CHECK(apply_tactic(state_of("A \\/ True"), "trivial.").status == CheckResult::Status::invalid);
}

TEST_CASE("tactic: apply peels every premise of the hypothesis") {
  // H : A -> B, H2 : A |- B  --apply H.-->  same hypotheses |- A
  KernelState mp{{parse_goal("H : A -> B, H2 : A |- B")}};
  const CheckResult r = apply_tactic(mp, "apply H.");
  REQUIRE(r.status == CheckResult::Status::incomplete);
  REQUIRE(r.next.goals.size() == 1);
  CHECK(r.next.goals[0].hypotheses.size() == 2);
  CHECK(r.next.goals[0].target->to_string() == "A");

  // Two premises yield two subgoals, in premise order, prepended.
  KernelState two{{parse_goal("H : A -> B -> C |- C")}};
  const CheckResult r2 = apply_tactic(two, "apply H.");
  REQUIRE(r2.status == CheckResult::Status::incomplete);
  REQUIRE(r2.next.goals.size() == 2);
  CHECK(r2.next.goals[0].target->to_string() == "A");
  CHECK(r2.next.goals[1].target->to_string() == "B");

  // The conclusion is the minimal match: H : A -> (B -> C) against target
  // B -> C peels one premise, not two.
  KernelState nested{{parse_goal("H : A -> B -> C |- B -> C")}};
  const CheckResult r3 = apply_tactic(nested, "apply H.");
  REQUIRE(r3.status == CheckResult::Status::incomplete);
  REQUIRE(r3.next.goals.size() == 1);
  CHECK(r3.next.goals[0].target->to_string() == "A");

  CHECK(apply_tactic(state_of("H : A -> B |- C"), "apply H.").status ==
        CheckResult::Status::invalid);
  // A bare hypothesis has no premise to peel.
  CHECK(apply_tactic(state_of("H : A |- A"), "apply H.").status == CheckResult::Status::invalid);
}

TEST_CASE("tactics operate on the focused goal only") {
  const CheckResult split = apply_tactic(state_of("True /\\ A"), "split.");
  REQUIRE(split.next.goals.size() == 2);
  const CheckResult closed = apply_tactic(split.next, "trivial.");
  REQUIRE(closed.status == CheckResult::Status::incomplete);
  REQUIRE(closed.next.goals.size() == 1);
  CHECK(closed.next.goals[0].target->to_string() == "A");
}

TEST_CASE("goal-count accounting") {
  auto count_after = [](const std::string& goal, const std::string& tactic) {
    const CheckResult r = apply_tactic(KernelState{{parse_goal(goal)}}, tactic);
    REQUIRE(r.status != CheckResult::Status::invalid);
    return r.status == CheckResult::Status::complete ? 0 : (int)r.next.goals.size();
  };
  CHECK(count_after("A /\\ B", "split.") == 2);        // +1
  CHECK(count_after("A \\/ B", "left.") == 1);         // 0
  CHECK(count_after("A -> B", "intro H.") == 1);       // 0
  CHECK(count_after("True", "trivial.") == 0);         // -1
  CHECK(count_after("H : A -> B -> C |- C", "apply H.") == 2);  // n - 1 = +1
}

TEST_CASE("apply_tactic is total over junk input") {
  const KernelState s = state_of("A -> A");
  for (const char* junk : {"", ".", "frobnicate.", "intro.", "intro", "exact.", "apply .",
                           "split. split.", "intro H", "??", "intro H. extra"}) {
    const CheckResult r = apply_tactic(s, junk);
    CHECK(r.status == CheckResult::Status::invalid);
    CHECK_FALSE(r.message.empty());
  }
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    std::string junk;
    for (int j = rng() % 12; j-- > 0;) junk.push_back((char)(rng() % 96 + 32));
    (void)apply_tactic(s, junk);  // must not throw
  }
  CHECK(apply_tactic(KernelState{}, "trivial.").status == CheckResult::Status::invalid);
}

TEST_CASE("check_script") {
  CHECK(check_script(parse_goal("True"), {"trivial."}).status == CheckResult::Status::complete);
  CHECK(check_script(parse_goal("A"), {"assumption."}).status == CheckResult::Status::invalid);
  CHECK(check_script(parse_goal("A -> A"), {"intro H.", "exact H."}).status ==
        CheckResult::Status::complete);
  // Unfinished script is incomplete, not invalid.
  CHECK(check_script(parse_goal("A -> A"), {"intro H."}).status ==
        CheckResult::Status::incomplete);
  // Tactics after completion are invalid.
  CHECK(check_script(parse_goal("True"), {"trivial.", "trivial."}).status ==
        CheckResult::Status::invalid);
  // Short-circuits on the first invalid tactic.
  CHECK(check_script(parse_goal("A -> A"), {"split.", "intro H."}).status ==
        CheckResult::Status::invalid);
}

TEST_CASE("render_state formats goals deterministically") {
  CHECK(render_state_text(KernelState{}) == "No more goals.");

  KernelState one{{parse_goal("H : A |- B")}};
  CHECK(render_state_text(one) == "Goal 1 of 1\nH : A\n=====\nB");

  const CheckResult split = apply_tactic(state_of("A /\\ B"), "split.");
  CHECK(render_state_text(split.next) == "Goal 1 of 2\n=====\nA\n\nGoal 2 of 2\n=====\nB");

  const ProofState ps = render_state(one, 3);
  CHECK(ps.text == render_state_text(one));
  CHECK(ps.step_index == 3);
}

TEST_CASE("complete scripts replay to the empty state step by step") {
  // Self-consistency: whatever check_script accepts, manual folding accepts.
  const Goal goal = parse_goal("(A -> B) -> A -> B");
  const std::vector<std::string> script = {"intro H.", "intro H2.", "apply H.", "exact H2."};
  REQUIRE(check_script(goal, script).status == CheckResult::Status::complete);

  KernelState s{{goal}};
  for (std::size_t i = 0; i < script.size(); ++i) {
    const CheckResult r = apply_tactic(s, script[i]);
    REQUIRE(r.status != CheckResult::Status::invalid);
    if (i + 1 < script.size()) {
      REQUIRE(r.status == CheckResult::Status::incomplete);
      s = r.next;
    } else {
      CHECK(r.status == CheckResult::Status::complete);
    }
  }
}
