#pragma once

/**
 * Policy client: the text-completion interface everything else talks to.
 *
 * PolicyEndpoint is the abstract surface (one blocking completion call plus
 * k-sample fan-out). ScriptedPolicy is the offline implementation used by
 * tests and demos: an ordered rule table mapping prompt patterns to canned
 * replies, with stop-sequence and token-budget semantics simulated so the
 * engine exercises the same code paths as against a live server. The HTTP
 * implementation lives in http_policy.hpp.
 */

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ics/errors.hpp"
#include "ics/tokenize.hpp"

namespace ics {

// ==================== requests and results ====================

struct SamplingParams {
  double temperature = 0.5;
  double top_p = 0.9;
  int top_k = 50;
  std::size_t max_tokens = 2048;
  std::vector<std::string> stop_sequences;

  // Per-role budgets. Temperature, top-p and top-k stay global.
  static SamplingParams for_solution() { return with_budget(2048); }
  static SamplingParams for_verification() { return with_budget(512); }
  static SamplingParams for_feedback() { return with_budget(1024); }
  static SamplingParams for_thought(std::size_t budget = 150) {
    SamplingParams p = with_budget(budget);
    p.stop_sequences = {"</thought>", "\n\n"};
    return p;
  }

 private:
  static SamplingParams with_budget(std::size_t budget) {
    SamplingParams p;
    p.max_tokens = budget;
    return p;
  }
};

struct CompletionRequest {
  std::string prompt;
  SamplingParams params;
};

enum class StopReason { StopSequence, Length, EndOfText };

inline std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::StopSequence: return "stop_sequence";
    case StopReason::Length: return "length";
    case StopReason::EndOfText: return "end_of_text";
  }
  return "?";
}

struct TokenUsage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct CompletionResult {
  std::string text;  // never contains a configured stop sequence
  StopReason stop_reason = StopReason::EndOfText;
  TokenUsage usage;
  int retries_used = 0;
};

// ==================== endpoint interface ====================

class PolicyEndpoint {
 public:
  virtual ~PolicyEndpoint() = default;

  virtual CompletionResult complete(const CompletionRequest& request) = 0;

  /// k independent samples of the same request, order preserved.
  std::vector<CompletionResult> multi_sample(const CompletionRequest& request, std::size_t k) {
    std::vector<CompletionResult> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(complete(request));
    return out;
  }
};

// ==================== scripted endpoint ====================

/// How a rule matches an incoming prompt.
enum class MatchKind { Exact, Contains, EndsWith };

/**
 * Deterministic scripted policy. Rules are checked in insertion order; the
 * first match wins. A rule with one reply always returns that reply (same
 * prompt, same text). A rule with several replies cycles through them in
 * order, which is how tests script "sample k responses" or a correction loop
 * whose regeneration prompt repeats.
 *
 * Every request is appended to a log so tests can assert request counts and
 * exact prompt bytes. An unmatched prompt is a test bug and throws ScriptMiss.
 */
class ScriptedPolicy final : public PolicyEndpoint {
 public:
  ScriptedPolicy& when_exact(std::string pattern, std::vector<std::string> replies) {
    return add_rule(MatchKind::Exact, std::move(pattern), std::move(replies));
  }
  ScriptedPolicy& when_contains(std::string pattern, std::vector<std::string> replies) {
    return add_rule(MatchKind::Contains, std::move(pattern), std::move(replies));
  }
  ScriptedPolicy& when_ends_with(std::string pattern, std::vector<std::string> replies) {
    return add_rule(MatchKind::EndsWith, std::move(pattern), std::move(replies));
  }

  ScriptedPolicy& add_rule(MatchKind kind, std::string pattern, std::vector<std::string> replies) {
    if (replies.empty()) throw std::invalid_argument("scripted rule needs at least one reply");
    std::lock_guard<std::mutex> lock(mu_);
    rules_.push_back(Rule{kind, std::move(pattern), std::move(replies), 0, 0});
    return *this;
  }

  CompletionResult complete(const CompletionRequest& request) override {
    std::lock_guard<std::mutex> lock(mu_);
    log_.push_back(request.prompt);
    for (Rule& rule : rules_) {
      if (!matches(rule, request.prompt)) continue;
      const std::string& reply = rule.replies[rule.cursor % rule.replies.size()];
      ++rule.cursor;
      ++rule.hits;
      return shape(reply, request);
    }
    throw ScriptMiss("no scripted rule matches prompt: " + snippet(request.prompt));
  }

  // ---- inspection hooks for tests ----

  std::vector<std::string> request_log() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
  }
  std::size_t total_requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_.size();
  }
  std::size_t requests_containing(std::string_view needle) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t n = 0;
    for (const std::string& p : log_)
      if (p.find(needle) != std::string::npos) ++n;
    return n;
  }
  std::size_t rule_hits(std::size_t rule_index) const {
    std::lock_guard<std::mutex> lock(mu_);
    return rules_.at(rule_index).hits;
  }
  void clear_log() {
    std::lock_guard<std::mutex> lock(mu_);
    log_.clear();
  }

 private:
  struct Rule {
    MatchKind kind;
    std::string pattern;
    std::vector<std::string> replies;
    std::size_t cursor;
    std::size_t hits;
  };

  static bool matches(const Rule& rule, const std::string& prompt) {
    switch (rule.kind) {
      case MatchKind::Exact:
        return prompt == rule.pattern;
      case MatchKind::Contains:
        return prompt.find(rule.pattern) != std::string::npos;
      case MatchKind::EndsWith:
        return prompt.size() >= rule.pattern.size() &&
               prompt.compare(prompt.size() - rule.pattern.size(), rule.pattern.size(), rule.pattern) == 0;
    }
    return false;
  }

  // Simulates server-side decoding: the token budget bounds the raw stream,
  // then the earliest stop sequence inside that window ends the completion.
  static CompletionResult shape(const std::string& reply, const CompletionRequest& request) {
    CompletionResult res;
    res.usage.prompt_tokens = approx_token_count(request.prompt);

    std::string window = truncate_to_tokens(reply, request.params.max_tokens);
    std::size_t stop_at = std::string::npos;
    for (const std::string& stop : request.params.stop_sequences) {
      if (stop.empty()) continue;
      std::size_t pos = window.find(stop);
      if (pos != std::string::npos && pos < stop_at) stop_at = pos;
    }
    if (stop_at != std::string::npos) {
      res.text = window.substr(0, stop_at);
      res.stop_reason = StopReason::StopSequence;
    } else if (window.size() < reply.size()) {
      res.text = window;
      res.stop_reason = StopReason::Length;
    } else {
      res.text = window;
      res.stop_reason = StopReason::EndOfText;
    }
    res.usage.completion_tokens = approx_token_count(res.text);
    return res;
  }

  static std::string snippet(const std::string& prompt) {
    constexpr std::size_t kKeep = 120;
    if (prompt.size() <= 2 * kKeep) return prompt;
    return prompt.substr(0, kKeep) + " ... " + prompt.substr(prompt.size() - kKeep);
  }

  mutable std::mutex mu_;
  std::vector<Rule> rules_;
  std::vector<std::string> log_;
};

}  // namespace ics
