#pragma once

/**
 * Prompt templates and builders.
 *
 * Every prompt the engine sends lives here as a versioned constant plus a
 * builder that splices in the per-problem pieces. Golden-file tests freeze
 * the exact bytes, so edits here must bump kPromptVersion and regenerate the
 * fixtures. Templates are UTF-8; the worked examples intentionally contain
 * multiplication signs and superscripts.
 */

#include <string>
#include <string_view>
#include <vector>

namespace ics {

inline constexpr int kPromptVersion = 1;

// ==================== thought-by-thought generation ====================

// Few-shot preamble for structured generation: instructions, two worked
// examples, then "Q: <question>" and any already-accepted thoughts as a
// numbered list. The completion is expected to continue the list, closing
// each thought with the </thought> delimiter.
inline constexpr std::string_view kThoughtGenerationPreamble =
    "You are solving a problem step-by-step.\n"
    "\n"
    "Instructions:\n"
    "1. State your next reasoning step (one observation, calculation, or deduction)\n"
    "2. End each thought with </thought>\n"
    "3. Continue until you reach the final answer, then write it in \\boxed{answer} format\n"
    "\n"
    "Examples:\n"
    "\n"
    "Q: In how many ways can 5 distinct books be arranged on a shelf if 2 specific books must "
    "not be adjacent?\n"
    "1. Total arrangements without restrictions is 5! = 120</thought>\n"
    "2. I need to subtract arrangements where the 2 specific books ARE adjacent</thought>\n"
    "3. If I treat the 2 books as a single unit, I have 4 units to arrange: 4! = 24 ways</thought>\n"
    "4. The 2 books within their unit can be arranged in 2! = 2 ways</thought>\n"
    "5. So arrangements with the books adjacent = 24 \u00d7 2 = 48</thought>\n"
    "6. Therefore, arrangements where they are NOT adjacent = 120 - 48 = \\boxed{72}</thought>\n"
    "\n"
    "Q: A rectangle has area 48 and perimeter 28. What is the length of its diagonal?\n"
    "1. Let length = l and width = w. From the area: lw = 48</thought>\n"
    "2. From the perimeter: 2l + 2w = 28, so l + w = 14</thought>\n"
    "3. From l + w = 14, we get w = 14 - l. Substituting into lw = 48: l(14 - l) = 48</thought>\n"
    "4. Expanding: 14l - l\u00b2 = 48, so l\u00b2 - 14l + 48 = 0. Factoring: (l - 6)(l - 8) = 0</thought>\n"
    "5. So l = 8 and w = 6 (or vice versa). Using the Pythagorean theorem: d\u00b2 = 8\u00b2 + 6\u00b2 "
    "= 64 + 36 = 100</thought>\n"
    "6. Therefore d = 10, so the answer is \\boxed{10} </thought>\n"
    "\n"
    "Q: ";

/// Full generation prompt. With an empty prefix the prompt ends right after
/// the question; accepted thoughts are appended as "i. <text></thought>"
/// lines so the model continues the numbering.
inline std::string build_generation_prompt(std::string_view question,
                                           const std::vector<std::string>& prior_thoughts) {
  std::string out(kThoughtGenerationPreamble);
  out += question;
  for (std::size_t i = 0; i < prior_thoughts.size(); ++i) {
    out += '\n';
    out += std::to_string(i + 1);
    out += ". ";
    out += prior_thoughts[i];
    out += "</thought>";
  }
  return out;
}

// ==================== step localization / self-verification ====================

/// Localization over a numbered trace. `rendered_chain` is the
/// "Step i: <text>" rendering; `step_count` is n. Step 0 is the
/// everything-is-correct sentinel, which is also how self-verification reads
/// the reply.
inline std::string build_localization_prompt(std::string_view rendered_chain, std::size_t step_count) {
  std::string out = "You are given a reasoning trace:\n";
  out += rendered_chain;
  out +=
      "\n"
      "\n"
      "Carefully verify your reasoning chain step by step. If you identify any errors "
      "(logical flaw, arithmetic error, or incorrect assumption), determine which step number "
      "(1 to ";
  out += std::to_string(step_count);
  out +=
      ") contains the first critical error.\n"
      "\n"
      "Also provide your reasoning. Then conclude with:\n"
      "1. \\boxed{step_number} if you found an error\n"
      "2. \\boxed{0} if the reasoning is correct";
  return out;
}

// ==================== plain chain-of-thought arms ====================

/// Standard CoT prompt shared by the feedback-loop and question-verification
/// baselines.
inline std::string build_cot_prompt(std::string_view problem_text) {
  std::string out =
      "Solve the following problem step by step. Show your reasoning clearly and put your "
      "final answer in \\boxed{answer}.\n"
      "\n"
      "Problem: ";
  out += problem_text;
  out +=
      "\n"
      "\n"
      "Solution:";
  return out;
}

inline std::string build_feedback_prompt(std::string_view problem_text, std::string_view solution_text) {
  std::string out =
      "You are reviewing a solution to a math problem. Analyze it carefully for errors.\n"
      "\n"
      "Problem: ";
  out += problem_text;
  out +=
      "\n"
      "\n"
      "Solution to review:\n";
  out += solution_text;
  out +=
      "\n"
      "\n"
      "Provide feedback on this solution:\n"
      "1. Is the solution correct? Answer YES or NO at the start.\n"
      "2. If NO, identify the specific error(s) and explain what went wrong.\n"
      "3. If YES, confirm the solution is correct.\n"
      "\n"
      "Feedback:";
  return out;
}

inline std::string build_refine_prompt(std::string_view problem_text, std::string_view previous_solution,
                                       std::string_view feedback_text) {
  std::string out =
      "You previously attempted to solve a problem but received feedback indicating errors. "
      "Use the feedback to produce a corrected solution.\n"
      "\n"
      "Problem: ";
  out += problem_text;
  out +=
      "\n"
      "\n"
      "Your previous solution:\n";
  out += previous_solution;
  out +=
      "\n"
      "\n"
      "Feedback on your solution:\n";
  out += feedback_text;
  out +=
      "\n"
      "\n"
      "Now provide a corrected solution. Show your reasoning step by step and put your final "
      "answer in \\boxed{answer}.\n"
      "\n"
      "Corrected Solution:";
  return out;
}

// ==================== question-verification (factored) arm ====================

inline std::string build_verification_plan_prompt(std::string_view problem_text,
                                                  std::string_view baseline_solution) {
  std::string out =
      "You have provided a solution to a math problem. Now generate verification questions to "
      "check if your solution is correct.\n"
      "\n"
      "Problem: ";
  out += problem_text;
  out +=
      "\n"
      "\n"
      "Your solution:\n";
  out += baseline_solution;
  out +=
      "\n"
      "\n"
      "Generate 2-4 specific verification questions that would help verify the correctness of "
      "this solution. Each question should check a specific step, calculation, or reasoning in "
      "the solution.\n"
      "\n"
      "Format your questions as a numbered list:\n"
      "1. [First verification question]\n"
      "2. [Second verification question]\n"
      "3. ...\n"
      "\n"
      "Verification Questions:";
  return out;
}

/// Factored execution: the question is answered with nothing else in context.
inline std::string build_verification_execute_prompt(std::string_view question) {
  std::string out =
      "Answer the following question carefully and precisely.\n"
      "\n"
      "Question: ";
  out += question;
  out +=
      "\n"
      "\n"
      "Answer:";
  return out;
}

struct QaPair {
  std::string question;
  std::string answer;
};

inline std::string build_verification_final_prompt(std::string_view problem_text,
                                                   std::string_view baseline_solution,
                                                   const std::vector<QaPair>& qa) {
  std::string out =
      "You previously solved a problem and generated verification questions with answers. Use "
      "this verified information to produce a final, corrected solution.\n"
      "\n"
      "Problem: ";
  out += problem_text;
  out +=
      "\n"
      "\n"
      "Your baseline solution:\n";
  out += baseline_solution;
  out +=
      "\n"
      "\n"
      "Verification questions and answers:\n";
  for (std::size_t i = 0; i < qa.size(); ++i) {
    if (i > 0) out += '\n';
    out += 'Q';
    out += std::to_string(i + 1);
    out += ": ";
    out += qa[i].question;
    out += '\n';
    out += 'A';
    out += std::to_string(i + 1);
    out += ": ";
    out += qa[i].answer;
  }
  out +=
      "\n"
      "\n"
      "Based on the verification results, provide your final solution. If the verifications "
      "revealed any errors, correct them. Show your reasoning step by step and put your final "
      "answer in \\boxed{answer}.\n"
      "\n"
      "Final Solution:";
  return out;
}

// ==================== quote-localized unstructured arm ====================

inline std::string build_token_cot_prompt(std::string_view problem_text) {
  std::string out =
      "Solve the following math problem step by step. Show your reasoning clearly, then "
      "provide your final answer in the format \\boxed{answer}.\n"
      "\n"
      "Problem: ";
  out += problem_text;
  out +=
      "\n"
      "\n"
      "Solution:";
  return out;
}

inline std::string build_token_localization_prompt(std::string_view problem_text,
                                                   std::string_view solution_text) {
  std::string out = "Problem: ";
  out += problem_text;
  out +=
      "\n"
      "\n"
      "Current solution:\n";
  out += solution_text;
  out +=
      "\n"
      "\n"
      "Carefully verify your solution step by step. If you identify any errors (logical flaw, "
      "arithmetic error, or incorrect assumption), quote the EXACT text (word-for-word) where "
      "the first critical error occurs. This should be a continuous excerpt from your solution "
      "above.\n"
      "\n"
      "Provide your reasoning and analysis. Then conclude with:\n"
      "- \\boxed{ERROR_QUOTE: \"exact text from solution where error occurs\"} if you found an "
      "error\n"
      "- \\boxed{CORRECT} if the solution is correct";
  return out;
}

/// Continuation after truncating at an error quote: the generation prompt
/// with the retained solution prefix already filled in.
inline std::string build_token_continuation_prompt(std::string_view problem_text,
                                                   std::string_view truncated_prefix) {
  std::string out = build_token_cot_prompt(problem_text);
  out += '\n';
  out += truncated_prefix;
  return out;
}

}  // namespace ics
