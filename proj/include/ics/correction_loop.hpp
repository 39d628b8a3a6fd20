#pragma once

/**
 * The correction loop: generate, verify, localize, backtrack, resample.
 *
 * Iteration 0 is the initial generation. Each pass verifies the current
 * trajectory; an unflagged trajectory exits as VerifiedAccuracy. A flagged
 * trajectory goes to localization: a NoError reply contradicts the flag and
 * exits as VLDisagreement, an ErrorAt(e) reply backtracks to the prefix
 * ending at step e-1 and resamples. After max_iterations corrections the
 * run exits MaxIter with its last trajectory unverified.
 *
 * With the confidence safeguard on (the autonomous variant), the two
 * low-confidence exits (VLDisagreement, MaxIter) revert the final answer to
 * iteration 0's answer; a VerifiedAccuracy exit keeps the corrected answer.
 *
 * The structured mode works on the reasoning tree; the unstructured mode
 * runs the same loop over a flat solution string, localizing by quoting the
 * erroneous text and truncating at the first exact match (a misquote
 * regenerates from scratch).
 */

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ics/answer_kit.hpp"
#include "ics/errors.hpp"
#include "ics/generation.hpp"
#include "ics/localization.hpp"
#include "ics/policy_client.hpp"
#include "ics/prompts.hpp"
#include "ics/reasoning_tree.hpp"
#include "ics/run_record.hpp"
#include "ics/verification.hpp"

namespace ics {

struct LoopConfig {
  int max_iterations = 10;  // correction attempts after iteration 0
  GateStrategy gate = GateStrategy::single();
  bool safeguard = false;   // revert low-confidence exits to the initial answer
  GenerationConfig generation;                                    // structured mode
  SamplingParams solution_params = SamplingParams::for_solution();  // unstructured mode

  void validate() const {
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    gate.validate();
    generation.validate();
  }
};

struct ThoughtIcsOutcome {
  RunRecord record;
  ReasoningTree tree;
};

namespace detail {

inline IterationRecord start_iteration(int index, const std::optional<std::string>& answer,
                                       const Problem& problem) {
  IterationRecord it;
  it.index = index;
  it.answer = answer;
  it.answer_correct = answer && match_answer(*answer, problem.gold_answer, problem.answer_mode);
  return it;
}

inline std::optional<std::string> trajectory_answer(const Trajectory& traj) {
  if (traj.terminal.kind == TerminalStatus::Kind::Answered) return traj.terminal.answer;
  return std::nullopt;
}

inline void finish_record(RunRecord& r, ExitCondition exit, bool safeguard) {
  r.exit = exit;
  r.initial_answer = r.iterations.front().answer;
  r.initial_correct = r.iterations.front().answer_correct;
  r.final_answer = r.iterations.back().answer;
  r.final_correct = r.iterations.back().answer_correct;
  r.terminal_iteration = static_cast<int>(r.iterations.size()) - 1;
  if (safeguard && exit != ExitCondition::VerifiedAccuracy) {
    r.final_answer = r.initial_answer;
    r.final_correct = r.initial_correct;
    r.safeguard_applied = true;
  }
  validate(r);
}

inline RunRecord failed_record(const Problem& problem, Method method, std::string_view gate,
                               const std::exception& e) {
  RunRecord r;
  r.problem_id = problem.id;
  r.dataset = problem.dataset;
  r.method = method;
  r.gate_name = std::string(gate);
  r.gold_answer = problem.gold_answer;
  r.answer_mode = problem.answer_mode;
  r.failed = true;
  r.failure_reason = e.what();
  return r;
}

}  // namespace detail

/// Structured correction over a reasoning tree.
inline ThoughtIcsOutcome run_thought_ics(const Problem& problem, PolicyEndpoint& endpoint,
                                         const LoopConfig& config) {
  config.validate();
  ReasoningTree tree(problem);

  RunRecord record;
  record.problem_id = problem.id;
  record.dataset = problem.dataset;
  record.method = config.safeguard ? Method::ThoughtICSA : Method::ThoughtICS;
  record.gate_name = std::string(config.gate.name());
  record.gold_answer = problem.gold_answer;
  record.answer_mode = problem.answer_mode;

  try {
    Trajectory traj = generate(endpoint, tree, PrefixState{kRootNode}, config.generation, 0);
    for (int i = 0;; ++i) {
      record.iterations.push_back(detail::start_iteration(i, detail::trajectory_answer(traj), problem));
      IterationRecord& it = record.iterations.back();

      if (i == config.max_iterations) {
        // Correction budget spent; this last trajectory is never verified.
        detail::finish_record(record, ExitCondition::MaxIter, config.safeguard);
        return {std::move(record), std::move(tree)};
      }

      if (traj.thought_count() == 0) {
        // An empty (degenerate) trajectory has nothing to verify or localize:
        // it cannot be accepted (there is no answer) and cannot be repaired,
        // so flag it and exit as a disagreement without touching the model.
        it.verdict_flagged = true;
        it.localization_no_error = true;
        it.localization_unparseable = true;
        detail::finish_record(record, ExitCondition::VLDisagreement, config.safeguard);
        return {std::move(record), std::move(tree)};
      }

      Verdict verdict = run_gate(endpoint, tree, traj, config.gate);
      it.verdict_flagged = verdict.flagged_incorrect;
      it.verdict_votes = verdict.votes;
      it.verdict_unparseable_votes = verdict.unparseable_votes;
      if (!verdict.flagged_incorrect) {
        detail::finish_record(record, ExitCondition::VerifiedAccuracy, config.safeguard);
        return {std::move(record), std::move(tree)};
      }

      LocalizationResult loc = localize_thought(endpoint, tree, traj);
      it.localization_clean_parse = loc.clean_parse;
      it.localization_unparseable = loc.unparseable;
      if (!loc.found_error()) {
        it.localization_no_error = true;
        detail::finish_record(record, ExitCondition::VLDisagreement, config.safeguard);
        return {std::move(record), std::move(tree)};
      }

      it.localized_step = loc.step;
      it.resampled_from_step = loc.step;
      PrefixState prefix = tree.prefix_state(traj, loc.step);
      traj = generate(endpoint, tree, prefix, config.generation, i + 1);
    }
  } catch (const EndpointUnavailable& e) {
    return {detail::failed_record(problem, record.method, config.gate.name(), e), std::move(tree)};
  }
}

// ==================== unstructured variant ====================

namespace detail {

/// Gate an unstructured solution: Oracle compares the extracted answer with
/// gold; self gates sample k quote-localizations and vote found-error.
inline Verdict gate_token(PolicyEndpoint& endpoint, const Problem& problem,
                          const std::string& solution_text, const std::optional<std::string>& answer,
                          const GateStrategy& strategy) {
  if (strategy.kind == GateStrategy::Kind::Oracle)
    return gate_oracle(answer ? *answer : "", problem.gold_answer, problem.answer_mode);
  std::vector<bool> votes;
  int unparseable = 0;
  for (int i = 0; i < strategy.sample_count(); ++i) {
    QuoteResult q = localize_token(endpoint, problem.question, solution_text);
    votes.push_back(q.found_error());
    unparseable += q.unparseable ? 1 : 0;
  }
  Verdict verdict = gate_votes(strategy, votes);
  verdict.unparseable_votes = unparseable;
  return verdict;
}

}  // namespace detail

/// Unstructured correction over a flat chain-of-thought string.
inline RunRecord run_token_ics(const Problem& problem, PolicyEndpoint& endpoint, const LoopConfig& config) {
  config.validate();

  RunRecord record;
  record.problem_id = problem.id;
  record.dataset = problem.dataset;
  record.method = Method::TokenICS;
  record.gate_name = std::string(config.gate.name());
  record.gold_answer = problem.gold_answer;
  record.answer_mode = problem.answer_mode;

  try {
    CompletionRequest initial{build_token_cot_prompt(problem.question), config.solution_params};
    std::string solution = endpoint.complete(initial).text;

    for (int i = 0;; ++i) {
      std::optional<std::string> answer = extract_boxed(solution);
      record.iterations.push_back(detail::start_iteration(i, answer, problem));
      IterationRecord& it = record.iterations.back();

      if (i == config.max_iterations) {
        detail::finish_record(record, ExitCondition::MaxIter, config.safeguard);
        return record;
      }

      Verdict verdict = detail::gate_token(endpoint, problem, solution, answer, config.gate);
      it.verdict_flagged = verdict.flagged_incorrect;
      it.verdict_votes = verdict.votes;
      it.verdict_unparseable_votes = verdict.unparseable_votes;
      if (!verdict.flagged_incorrect) {
        detail::finish_record(record, ExitCondition::VerifiedAccuracy, config.safeguard);
        return record;
      }

      QuoteResult loc = localize_token(endpoint, problem.question, solution);
      it.localization_unparseable = loc.unparseable;
      if (!loc.found_error()) {
        it.localization_no_error = true;
        detail::finish_record(record, ExitCondition::VLDisagreement, config.safeguard);
        return record;
      }

      std::optional<std::size_t> cut = find_truncation(solution, loc.quote);
      it.truncation_offset = cut;
      if (cut) {
        std::string prefix = solution.substr(0, *cut);
        CompletionRequest cont{build_token_continuation_prompt(problem.question, prefix),
                               config.solution_params};
        solution = prefix + endpoint.complete(cont).text;
      } else {
        // Misquote: byte-exact matching is deliberately unforgiving, so a
        // miss regenerates the whole solution from scratch.
        solution = endpoint.complete(initial).text;
      }
    }
  } catch (const EndpointUnavailable& e) {
    return detail::failed_record(problem, Method::TokenICS, config.gate.name(), e);
  }
}

}  // namespace ics
