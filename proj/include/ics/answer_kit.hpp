#pragma once

/**
 * Boxed-answer extraction and gold-answer matching.
 *
 * Extraction takes the contents of the last well-formed \boxed{...} span,
 * balancing nested braces by counting. Matching is deliberately strict:
 * multiple-choice answers compare after lowercase+trim, free-form math
 * answers compare byte-for-byte with no numeric canonicalization, so
 * "1/2" and "0.5" do NOT match. That strictness is a documented property
 * of the evaluation, not a bug.
 */

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace ics {

enum class AnswerMode { ExactMath, MultipleChoice };

inline std::string_view answer_mode_name(AnswerMode m) {
  return m == AnswerMode::ExactMath ? "exact_math" : "multiple_choice";
}

inline std::optional<AnswerMode> parse_answer_mode(std::string_view s) {
  if (s == "exact_math") return AnswerMode::ExactMath;
  if (s == "multiple_choice") return AnswerMode::MultipleChoice;
  return std::nullopt;
}

namespace detail {

/// Returns the contents of the \boxed{ span starting at `open` (index of the
/// '{'), or nullopt if braces never balance. Raw '{'/'}' are counted; escaped
/// braces get no special treatment.
inline std::optional<std::string> balanced_braces(std::string_view text, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      --depth;
      if (depth == 0) return std::string(text.substr(open + 1, i - open - 1));
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Extract the contents of the last well-formed \boxed{...} span in `text`.
/// Nested braces are balanced via brace counting; an unclosed span is skipped
/// in favor of the last span that does close. Absence is a value, not an error.
inline std::optional<std::string> extract_boxed(std::string_view text) {
  static constexpr std::string_view kMarker = "\\boxed{";
  std::optional<std::string> last;
  std::size_t pos = 0;
  while ((pos = text.find(kMarker, pos)) != std::string_view::npos) {
    std::size_t open = pos + kMarker.size() - 1;
    if (auto span = detail::balanced_braces(text, open)) last = std::move(span);
    pos += kMarker.size();
  }
  return last;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Gold-answer matching. MultipleChoice normalizes (lowercase, strip
/// whitespace) before comparing; ExactMath is byte equality of the raw strings.
inline bool match_answer(std::string_view pred, std::string_view gold, AnswerMode mode) {
  if (mode == AnswerMode::MultipleChoice) return lower(trim(pred)) == lower(trim(gold));
  return pred == gold;
}

}  // namespace ics
