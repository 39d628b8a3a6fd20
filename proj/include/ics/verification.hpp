#pragma once

/**
 * Verification: the gate that decides whether a trajectory stays in the
 * correction loop.
 *
 * Self-verification reuses the step-localization prompt; a parsed step of 0
 * means the model accepts its reasoning, anything else is a judged-incorrect
 * vote. Multi-sample gates draw k fresh completions of the same prompt and
 * combine the votes: Any flags on one vote, Majority needs a strict majority
 * (an even split does not flag), Unanimous needs every vote. The Oracle gate
 * skips the model entirely and flags exactly when the extracted answer fails
 * to match gold.
 */

#include <string>
#include <string_view>
#include <vector>

#include "ics/answer_kit.hpp"
#include "ics/errors.hpp"
#include "ics/localization.hpp"
#include "ics/policy_client.hpp"
#include "ics/reasoning_tree.hpp"

namespace ics {

struct GateStrategy {
  enum class Kind { Single, Any, Majority, Unanimous, Oracle };
  Kind kind = Kind::Single;
  int k = 1;

  static GateStrategy single() { return {Kind::Single, 1}; }
  static GateStrategy any(int k = 9) { return {Kind::Any, k}; }
  static GateStrategy majority(int k = 9) { return {Kind::Majority, k}; }
  static GateStrategy unanimous(int k = 9) { return {Kind::Unanimous, k}; }
  static GateStrategy oracle() { return {Kind::Oracle, 0}; }

  /// Verification completions needed per gate decision.
  int sample_count() const {
    switch (kind) {
      case Kind::Single: return 1;
      case Kind::Oracle: return 0;
      default: return k;
    }
  }

  std::string_view name() const {
    switch (kind) {
      case Kind::Single: return "Single";
      case Kind::Any: return "Any";
      case Kind::Majority: return "Majority";
      case Kind::Unanimous: return "Unanimous";
      case Kind::Oracle: return "Oracle";
    }
    return "?";
  }

  void validate() const {
    if (kind != Kind::Oracle && sample_count() < 1)
      throw std::invalid_argument("gate needs k >= 1 samples");
  }
};

struct Verdict {
  enum class Source { Self, Oracle };
  bool flagged_incorrect = false;
  std::vector<bool> votes;  // per-sample judged-incorrect; empty for Oracle
  Source source = Source::Self;
  int unparseable_votes = 0;
};

/// One self-verification vote: localization-style call, step != 0 flags.
struct VoteOutcome {
  bool judged_incorrect = false;
  bool unparseable = false;
};

inline VoteOutcome self_verify_once(PolicyEndpoint& endpoint, const ReasoningTree& tree,
                                    const Trajectory& trajectory) {
  LocalizationResult r = localize_thought(endpoint, tree, trajectory);
  return {r.found_error(), r.unparseable};
}

/// Combine votes under a sampling strategy. Vote count must equal the
/// strategy's sample count; the Oracle gate has no votes and uses
/// gate_oracle instead.
inline Verdict gate_votes(const GateStrategy& strategy, const std::vector<bool>& votes) {
  strategy.validate();
  if (strategy.kind == GateStrategy::Kind::Oracle)
    throw std::invalid_argument("oracle gate takes answers, not votes");
  const int expected = strategy.sample_count();
  if (static_cast<int>(votes.size()) != expected)
    throw VoteCountMismatch(expected, static_cast<int>(votes.size()));

  int incorrect = 0;
  for (bool v : votes) incorrect += v ? 1 : 0;

  Verdict verdict;
  verdict.votes = votes;
  verdict.source = Verdict::Source::Self;
  switch (strategy.kind) {
    case GateStrategy::Kind::Single:
      verdict.flagged_incorrect = votes.front();
      break;
    case GateStrategy::Kind::Any:
      verdict.flagged_incorrect = incorrect >= 1;
      break;
    case GateStrategy::Kind::Majority:
      verdict.flagged_incorrect = 2 * incorrect > expected;
      break;
    case GateStrategy::Kind::Unanimous:
      verdict.flagged_incorrect = incorrect == expected;
      break;
    case GateStrategy::Kind::Oracle:
      break;
  }
  return verdict;
}

/// Oracle gate: flag iff the extracted final answer does not match gold.
/// A trajectory with no extractable answer can never match, so it flags.
inline Verdict gate_oracle(std::string_view final_answer, std::string_view gold, AnswerMode mode) {
  Verdict verdict;
  verdict.source = Verdict::Source::Oracle;
  verdict.flagged_incorrect = !match_answer(final_answer, gold, mode);
  return verdict;
}

/// Full gate decision for one trajectory: draws the strategy's sample count
/// of verification completions (or consults gold for Oracle) and combines.
inline Verdict run_gate(PolicyEndpoint& endpoint, const ReasoningTree& tree, const Trajectory& trajectory,
                        const GateStrategy& strategy) {
  strategy.validate();
  if (strategy.kind == GateStrategy::Kind::Oracle) {
    std::string answer =
        trajectory.terminal.kind == TerminalStatus::Kind::Answered ? trajectory.terminal.answer : "";
    return gate_oracle(answer, tree.problem().gold_answer, tree.problem().answer_mode);
  }
  std::vector<bool> votes;
  int unparseable = 0;
  for (int i = 0; i < strategy.sample_count(); ++i) {
    VoteOutcome vote = self_verify_once(endpoint, tree, trajectory);
    votes.push_back(vote.judged_incorrect);
    unparseable += vote.unparseable ? 1 : 0;
  }
  Verdict verdict = gate_votes(strategy, votes);
  verdict.unparseable_votes = unparseable;
  return verdict;
}

}  // namespace ics
