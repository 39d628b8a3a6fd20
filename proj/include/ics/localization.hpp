#pragma once

/**
 * Error localization.
 *
 * Structured traces: the model reads a numbered rendering of the trajectory
 * and answers with a boxed step number; 0 is the everything-correct sentinel.
 * Parsing prefers the boxed integer (clean parse); otherwise it falls back to
 * the last integer anywhere in the reply, and an answer with no integer at
 * all counts as NoError with the unparseable flag set. Steps past the end of
 * the trace clamp to the last step.
 *
 * Unstructured traces: the model quotes the exact text where the first error
 * occurs (ERROR_QUOTE payload) or declares the solution CORRECT. Quote
 * matching against the solution is byte-exact by design; a misquote simply
 * fails to match and the caller regenerates from scratch.
 */

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "ics/answer_kit.hpp"
#include "ics/policy_client.hpp"
#include "ics/prompts.hpp"
#include "ics/reasoning_tree.hpp"

namespace ics {

struct LocalizationResult {
  enum class Outcome { ErrorAt, NoError };
  Outcome outcome = Outcome::NoError;
  int step = 0;               // meaningful only for ErrorAt; always in [1, n]
  bool clean_parse = false;   // boxed integer parsed directly
  bool unparseable = false;   // no integer anywhere in the reply
  std::string raw_response;

  bool found_error() const { return outcome == Outcome::ErrorAt; }
};

struct QuoteResult {
  enum class Outcome { ErrorQuote, Correct };
  Outcome outcome = Outcome::Correct;
  std::string quote;          // nonempty iff ErrorQuote
  bool unparseable = false;
  std::string raw_response;

  bool found_error() const { return outcome == Outcome::ErrorQuote; }
};

namespace detail {

// Last maximal digit run in `text`, saturated at a value safely above any
// step count. Signs and decimal points are not part of an integer here, so
// "step 3.5" yields 5 and "-2" yields 2.
inline std::optional<long> last_integer(std::string_view text) {
  std::optional<long> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] < '0' || text[i] > '9') {
      ++i;
      continue;
    }
    long value = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      if (value < 1000000) value = value * 10 + (text[i] - '0');
      ++i;
    }
    found = value;
  }
  return found;
}

inline std::optional<long> parse_plain_integer(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  std::size_t i = 0;
  long value = 0;
  for (; i < t.size(); ++i) {
    if (t[i] < '0' || t[i] > '9') return std::nullopt;
    if (value < 1000000) value = value * 10 + (t[i] - '0');
  }
  return value;
}

}  // namespace detail

/// Parse a localization reply against a trace of `step_count` thoughts.
inline LocalizationResult parse_localization_response(std::string_view response, int step_count) {
  LocalizationResult out;
  out.raw_response = std::string(response);

  std::optional<long> value;
  if (auto boxed = extract_boxed(response)) {
    if (auto v = detail::parse_plain_integer(*boxed)) {
      value = v;
      out.clean_parse = true;
    }
  }
  if (!value) {
    value = detail::last_integer(response);
    out.clean_parse = false;
  }
  if (!value) {
    out.outcome = LocalizationResult::Outcome::NoError;
    out.unparseable = true;
    return out;
  }
  long v = *value;
  if (v == 0) {
    out.outcome = LocalizationResult::Outcome::NoError;
    return out;
  }
  if (v > step_count) v = step_count;
  out.outcome = LocalizationResult::Outcome::ErrorAt;
  out.step = static_cast<int>(v);
  return out;
}

/// One localization call over a structured trajectory.
inline LocalizationResult localize_thought(PolicyEndpoint& endpoint, const ReasoningTree& tree,
                                           const Trajectory& trajectory,
                                           SamplingParams params = SamplingParams::for_verification()) {
  std::string prompt = build_localization_prompt(tree.render_numbered(trajectory),
                                                 trajectory.thought_count());
  CompletionResult res = endpoint.complete(CompletionRequest{std::move(prompt), std::move(params)});
  return parse_localization_response(res.text, static_cast<int>(trajectory.thought_count()));
}

/// Parse a quote-localization reply.
inline QuoteResult parse_quote_response(std::string_view response) {
  QuoteResult out;
  out.raw_response = std::string(response);
  auto boxed = extract_boxed(response);
  if (!boxed) {
    out.unparseable = true;
    return out;
  }
  std::string payload = trim(*boxed);
  if (payload == "CORRECT") return out;
  static constexpr std::string_view kTag = "ERROR_QUOTE:";
  if (payload.size() > kTag.size() && std::string_view(payload).substr(0, kTag.size()) == kTag) {
    std::string quote = trim(std::string_view(payload).substr(kTag.size()));
    if (quote.size() >= 2 && quote.front() == '"' && quote.back() == '"')
      quote = quote.substr(1, quote.size() - 2);
    if (!quote.empty()) {
      out.outcome = QuoteResult::Outcome::ErrorQuote;
      out.quote = std::move(quote);
      return out;
    }
  }
  out.unparseable = true;
  return out;
}

/// One localization call over an unstructured solution.
inline QuoteResult localize_token(PolicyEndpoint& endpoint, std::string_view problem_text,
                                  std::string_view solution_text,
                                  SamplingParams params = SamplingParams::for_verification()) {
  std::string prompt = build_token_localization_prompt(problem_text, solution_text);
  CompletionResult res = endpoint.complete(CompletionRequest{std::move(prompt), std::move(params)});
  return parse_quote_response(res.text);
}

/// Byte offset of the first exact occurrence of `quote` in `solution_text`;
/// nullopt when the quote does not appear verbatim.
inline std::optional<std::size_t> find_truncation(std::string_view solution_text, std::string_view quote) {
  if (quote.empty()) return std::nullopt;
  std::size_t pos = solution_text.find(quote);
  if (pos == std::string_view::npos) return std::nullopt;
  return pos;
}

}  // namespace ics
