#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>

namespace ics {

// Approximate tokenization used for budget accounting on scripted endpoints
// and for Thought::token_count: one token per whitespace-separated word.
// Remote endpoints report real usage; this stand-in only has to be monotone
// in text length and deterministic.

inline std::size_t approx_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_word) ++count;
    in_word = !ws;
  }
  return count;
}

/// Prefix of `text` containing at most `max_tokens` words, cut at the end of
/// the last whole word so original spacing inside the prefix is preserved.
inline std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens) {
  if (max_tokens == 0) return std::string();
  std::size_t count = 0;
  std::size_t last_word_end = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool ws = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!ws && !in_word) {
      if (count == max_tokens) return std::string(text.substr(0, last_word_end));
      ++count;
    }
    if (!ws) last_word_end = i + 1;
    in_word = !ws;
  }
  return std::string(text);
}

}  // namespace ics
