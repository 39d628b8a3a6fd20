#pragma once

/**
 * Comparison arms sharing the policy client and answer kit.
 *
 * Self-Refine: generate, ask for generic feedback, and regenerate from
 * scratch (with the feedback in context) while the feedback starts with NO,
 * up to a fixed refinement cap. Feedback that starts with neither YES nor NO
 * counts as NO and is flagged.
 *
 * Factored question-verification: exactly one pass. Generate a baseline,
 * plan numbered verification questions, answer each question with nothing
 * but the question in context (so the model cannot parrot its own solution),
 * then produce one final solution from the Q/A pairs. A plan with no
 * parseable questions keeps the baseline answer and flags the record.
 *
 * Plain CoT: single generation, used as the no-correction reference arm.
 */

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ics/answer_kit.hpp"
#include "ics/correction_loop.hpp"
#include "ics/errors.hpp"
#include "ics/policy_client.hpp"
#include "ics/prompts.hpp"
#include "ics/run_record.hpp"

namespace ics {

namespace detail {

/// First alphabetic token of the feedback, lowercased.
inline std::string first_alpha_token(std::string_view text) {
  std::size_t i = 0;
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  while (i < text.size() && !is_alpha(text[i])) ++i;
  std::string token;
  while (i < text.size() && is_alpha(text[i])) token += static_cast<char>(text[i++] | 0x20);
  return token;
}

}  // namespace detail

/// Parse a numbered-list plan into question texts. Lines must begin with
/// "<int>." or "<int>)" after trimming; at most `max_questions` are taken,
/// in order.
inline std::vector<std::string> parse_numbered_questions(std::string_view plan_text,
                                                         std::size_t max_questions = 6) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= plan_text.size() && out.size() < max_questions) {
    std::size_t end = plan_text.find('\n', start);
    if (end == std::string_view::npos) end = plan_text.size();
    std::string line = trim(plan_text.substr(start, end - start));
    start = end + 1;
    std::size_t i = 0;
    while (i < line.size() && i < 2 && line[i] >= '0' && line[i] <= '9') ++i;
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
    std::string question = trim(std::string_view(line).substr(i + 1));
    if (!question.empty()) out.push_back(std::move(question));
    if (start > plan_text.size()) break;
  }
  return out;
}

// ==================== Self-Refine ====================

inline RunRecord run_self_refine(const Problem& problem, PolicyEndpoint& endpoint, int max_iter = 10) {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");

  RunRecord record;
  record.problem_id = problem.id;
  record.dataset = problem.dataset;
  record.method = Method::SelfRefine;
  record.gate_name = "Feedback";
  record.gold_answer = problem.gold_answer;
  record.answer_mode = problem.answer_mode;

  try {
    std::string solution =
        endpoint.complete({build_cot_prompt(problem.question), SamplingParams::for_solution()}).text;
    for (int i = 0;; ++i) {
      record.iterations.push_back(detail::start_iteration(i, extract_boxed(solution), problem));
      IterationRecord& it = record.iterations.back();

      if (i == max_iter) {
        detail::finish_record(record, ExitCondition::MaxIter, false);
        return record;
      }

      std::string feedback =
          endpoint.complete({build_feedback_prompt(problem.question, solution),
                             SamplingParams::for_feedback()})
              .text;
      std::string token = detail::first_alpha_token(feedback);
      bool accepted = token == "yes";
      if (token != "yes" && token != "no") {
        record.flags.push_back("malformed_feedback_iteration_" + std::to_string(i));
        accepted = false;  // unreadable feedback keeps the loop going
      }
      it.verdict_flagged = !accepted;
      it.verdict_votes = {!accepted};
      if (accepted) {
        detail::finish_record(record, ExitCondition::VerifiedAccuracy, false);
        return record;
      }

      solution = endpoint
                     .complete({build_refine_prompt(problem.question, solution, feedback),
                                SamplingParams::for_solution()})
                     .text;
    }
  } catch (const EndpointUnavailable& e) {
    return detail::failed_record(problem, Method::SelfRefine, "Feedback", e);
  }
}

// ==================== factored question-verification ====================

struct CoveOutcome {
  RunRecord record;
  int questions_parsed = 0;
};

inline CoveOutcome run_cove_factored(const Problem& problem, PolicyEndpoint& endpoint) {
  RunRecord record;
  record.problem_id = problem.id;
  record.dataset = problem.dataset;
  record.method = Method::CoVe;
  record.gate_name = "Factored";
  record.gold_answer = problem.gold_answer;
  record.answer_mode = problem.answer_mode;

  try {
    std::string baseline =
        endpoint.complete({build_cot_prompt(problem.question), SamplingParams::for_solution()}).text;
    record.iterations.push_back(detail::start_iteration(0, extract_boxed(baseline), problem));

    std::string plan = endpoint
                           .complete({build_verification_plan_prompt(problem.question, baseline),
                                      SamplingParams::for_verification()})
                           .text;
    std::vector<std::string> questions = parse_numbered_questions(plan);
    if (questions.empty()) {
      record.flags.push_back("zero_verification_questions");
      detail::finish_record(record, ExitCondition::VerifiedAccuracy, false);
      return {std::move(record), 0};
    }
    if (questions.size() < 2 || questions.size() > 4)
      record.flags.push_back("question_count_outside_2_4");

    std::vector<QaPair> qa;
    qa.reserve(questions.size());
    for (const std::string& q : questions) {
      std::string a =
          endpoint.complete({build_verification_execute_prompt(q), SamplingParams::for_verification()})
              .text;
      qa.push_back({q, std::move(a)});
    }

    std::string final_solution =
        endpoint
            .complete({build_verification_final_prompt(problem.question, baseline, qa),
                       SamplingParams::for_solution()})
            .text;
    record.iterations.push_back(detail::start_iteration(1, extract_boxed(final_solution), problem));
    detail::finish_record(record, ExitCondition::VerifiedAccuracy, false);
    return {std::move(record), static_cast<int>(questions.size())};
  } catch (const EndpointUnavailable& e) {
    return {detail::failed_record(problem, Method::CoVe, "Factored", e), 0};
  }
}

// ==================== plain CoT reference arm ====================

inline RunRecord run_cot_only(const Problem& problem, PolicyEndpoint& endpoint) {
  RunRecord record;
  record.problem_id = problem.id;
  record.dataset = problem.dataset;
  record.method = Method::CoTOnly;
  record.gate_name = "None";
  record.gold_answer = problem.gold_answer;
  record.answer_mode = problem.answer_mode;

  try {
    std::string solution =
        endpoint.complete({build_cot_prompt(problem.question), SamplingParams::for_solution()}).text;
    record.iterations.push_back(detail::start_iteration(0, extract_boxed(solution), problem));
    detail::finish_record(record, ExitCondition::VerifiedAccuracy, false);
    return record;
  } catch (const EndpointUnavailable& e) {
    return detail::failed_record(problem, Method::CoTOnly, "None", e);
  }
}

}  // namespace ics
