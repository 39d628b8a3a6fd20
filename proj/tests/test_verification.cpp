#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "ics/policy_client.hpp"
#include "ics/reasoning_tree.hpp"
#include "ics/verification.hpp"

using namespace ics;

namespace {

struct Fixture {
  ReasoningTree tree;
  Trajectory traj;

  Fixture() : tree(make_problem()) {
    traj.node_path = {kRootNode};
    for (const char* t : {"compute 12+15", "12+15 = 276", "so the answer is \\boxed{276}"})
      traj.node_path.push_back(tree.append_thought(traj.node_path.back(), t));
    traj.terminal = TerminalStatus::answered("276");
  }

  static Problem make_problem() {
    Problem p;
    p.id = "sum-1";
    p.question = "What is 12+15?";
    p.gold_answer = "36";  // the trace above is wrong on purpose
    p.answer_mode = AnswerMode::ExactMath;
    p.dataset = "toy";
    return p;
  }
};

std::vector<bool> bits_of(unsigned mask, int k) {
  std::vector<bool> v(k);
  for (int i = 0; i < k; ++i) v[i] = (mask >> i) & 1u;
  return v;
}

}  // namespace

// ==================== single-vote semantics ====================

TEST_CASE("a step-zero reply accepts the trajectory") {
  Fixture f;
  ScriptedPolicy policy;
  policy.when_contains("reasoning trace", {"I checked each step. \\boxed{0}"});
  VoteOutcome vote = self_verify_once(policy, f.tree, f.traj);
  CHECK_FALSE(vote.judged_incorrect);
  CHECK_FALSE(vote.unparseable);
}

TEST_CASE("a nonzero step reply is a judged-incorrect vote") {
  Fixture f;
  ScriptedPolicy policy;
  policy.when_contains("reasoning trace", {"The arithmetic slips at \\boxed{2}"});
  VoteOutcome vote = self_verify_once(policy, f.tree, f.traj);
  CHECK(vote.judged_incorrect);
}

TEST_CASE("an unparseable reply votes to accept but is counted") {
  Fixture f;
  ScriptedPolicy policy;
  policy.when_contains("reasoning trace", {"looks fine to me"});
  Verdict v = run_gate(policy, f.tree, f.traj, GateStrategy::single());
  CHECK_FALSE(v.flagged_incorrect);
  CHECK(v.unparseable_votes == 1);
}

// ==================== vote combination ====================

TEST_CASE("gate strategies combine hand-picked vote vectors as documented") {
  // 3 of 9 judged incorrect: enough for Any, not for Majority or Unanimous.
  std::vector<bool> three_of_nine = {true, false, false, true, false, false, true, false, false};
  CHECK(gate_votes(GateStrategy::any(9), three_of_nine).flagged_incorrect);
  CHECK_FALSE(gate_votes(GateStrategy::majority(9), three_of_nine).flagged_incorrect);
  CHECK_FALSE(gate_votes(GateStrategy::unanimous(9), three_of_nine).flagged_incorrect);

  // 5 of 9 is a strict majority.
  std::vector<bool> five_of_nine = {true, true, true, true, true, false, false, false, false};
  CHECK(gate_votes(GateStrategy::majority(9), five_of_nine).flagged_incorrect);
  CHECK_FALSE(gate_votes(GateStrategy::unanimous(9), five_of_nine).flagged_incorrect);

  // All nine.
  std::vector<bool> nine_of_nine(9, true);
  CHECK(gate_votes(GateStrategy::unanimous(9), nine_of_nine).flagged_incorrect);

  // Single looks only at its one vote.
  CHECK(gate_votes(GateStrategy::single(), {true}).flagged_incorrect);
  CHECK_FALSE(gate_votes(GateStrategy::single(), {false}).flagged_incorrect);
}

TEST_CASE("an even split is not a strict majority") {
  std::vector<bool> two_of_four = {true, true, false, false};
  CHECK_FALSE(gate_votes(GateStrategy::majority(4), two_of_four).flagged_incorrect);
  std::vector<bool> three_of_four = {true, true, true, false};
  CHECK(gate_votes(GateStrategy::majority(4), three_of_four).flagged_incorrect);
}

TEST_CASE("vote count must match the strategy sample count") {
  try {
    gate_votes(GateStrategy::majority(9), {true, false});
    FAIL("expected VoteCountMismatch");
  } catch (const VoteCountMismatch& e) {
    CHECK(e.expected == 9);
    CHECK(e.got == 2);
  }
  CHECK_THROWS_AS(gate_votes(GateStrategy::single(), std::vector<bool>{}), VoteCountMismatch);
  CHECK_THROWS_AS(gate_votes(GateStrategy::oracle(), std::vector<bool>{}), std::invalid_argument);
}

TEST_CASE("gate strictness is monotone on every possible vote vector") {
  // Exhaustively over all 2^k vote vectors for several k: whenever Unanimous
  // flags, Majority must flag; whenever Majority flags, Any must flag.
  for (int k : {1, 3, 5, 9}) {
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      std::vector<bool> votes = bits_of(mask, k);
      bool any = gate_votes(GateStrategy::any(k), votes).flagged_incorrect;
      bool maj = gate_votes(GateStrategy::majority(k), votes).flagged_incorrect;
      bool una = gate_votes(GateStrategy::unanimous(k), votes).flagged_incorrect;
      if (una) CHECK(maj);
      if (maj) CHECK(any);

      // Independent recount of the vote tally drives the expected verdicts.
      int incorrect = 0;
      for (bool b : votes) incorrect += b ? 1 : 0;
      CHECK(any == (incorrect >= 1));
      CHECK(maj == (2 * incorrect > k));
      CHECK(una == (incorrect == k));
    }
  }
}

// ==================== multi-sample gates over an endpoint ====================

TEST_CASE("a multi-sample gate draws k fresh completions") {
  Fixture f;
  ScriptedPolicy policy;
  // Votes cycle incorrect, correct, correct: 3 of 9 flag.
  policy.when_contains("reasoning trace", {"\\boxed{2}", "\\boxed{0}", "\\boxed{0}"});

  Verdict any = run_gate(policy, f.tree, f.traj, GateStrategy::any(9));
  CHECK(any.flagged_incorrect);
  CHECK(any.votes.size() == 9);
  CHECK(policy.total_requests() == 9);

  policy.clear_log();
  Verdict maj = run_gate(policy, f.tree, f.traj, GateStrategy::majority(9));
  CHECK_FALSE(maj.flagged_incorrect);
  CHECK(policy.total_requests() == 9);
}

// ==================== oracle gate ====================

TEST_CASE("the oracle gate compares the extracted answer against gold") {
  Fixture f;  // trajectory answered 276, gold is 36
  ScriptedPolicy policy;  // no rules: the oracle gate must not call the model
  Verdict v = run_gate(policy, f.tree, f.traj, GateStrategy::oracle());
  CHECK(v.flagged_incorrect);
  CHECK(v.source == Verdict::Source::Oracle);
  CHECK(v.votes.empty());
  CHECK(policy.total_requests() == 0);
}

TEST_CASE("the oracle gate accepts a matching answer") {
  CHECK_FALSE(gate_oracle("36", "36", AnswerMode::ExactMath).flagged_incorrect);
  CHECK(gate_oracle("36.0", "36", AnswerMode::ExactMath).flagged_incorrect);
  CHECK_FALSE(gate_oracle(" B ", "b", AnswerMode::MultipleChoice).flagged_incorrect);
}

TEST_CASE("a trajectory with no answer always flags under the oracle") {
  Fixture f;
  f.traj.terminal = TerminalStatus::max_depth();
  ScriptedPolicy policy;
  Verdict v = run_gate(policy, f.tree, f.traj, GateStrategy::oracle());
  CHECK(v.flagged_incorrect);
}

// ==================== strategy plumbing ====================

TEST_CASE("strategy names and sample counts") {
  CHECK(GateStrategy::single().name() == "Single");
  CHECK(GateStrategy::any().name() == "Any");
  CHECK(GateStrategy::majority().name() == "Majority");
  CHECK(GateStrategy::unanimous().name() == "Unanimous");
  CHECK(GateStrategy::oracle().name() == "Oracle");

  CHECK(GateStrategy::single().sample_count() == 1);
  CHECK(GateStrategy::any().sample_count() == 9);
  CHECK(GateStrategy::majority(5).sample_count() == 5);
  CHECK(GateStrategy::oracle().sample_count() == 0);

  GateStrategy bad = GateStrategy::any(0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
