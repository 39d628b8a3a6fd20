#pragma once

/**
 * Thought-by-thought generation.
 *
 * One trajectory is grown step by step: render the few-shot prompt with the
 * question and the accepted thoughts so far, request exactly one more thought
 * (delimiter and blank line are stop sequences), append it to the tree, and
 * stop when the new thought carries a boxed answer or the depth cap is hit.
 *
 * Per-thought token budgets escalate on truncation: a completion cut off by
 * the budget is discarded and the same step re-requested at the next larger
 * budget. At the last budget the output is taken as-is, so a reply with no
 * delimiter becomes one (possibly truncated) thought.
 */

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ics/answer_kit.hpp"
#include "ics/policy_client.hpp"
#include "ics/prompts.hpp"
#include "ics/reasoning_tree.hpp"

namespace ics {

struct GenerationConfig {
  int max_depth = 100;
  std::vector<std::size_t> budgets = {150, 300, 500};
  std::vector<std::string> stop_sequences = {"</thought>", "\n\n"};
  SamplingParams sampling;  // temperature/top_p/top_k; budget and stops overridden per step

  void validate() const {
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (budgets.empty()) throw std::invalid_argument("budgets must be nonempty");
    for (std::size_t i = 1; i < budgets.size(); ++i)
      if (budgets[i] <= budgets[i - 1])
        throw std::invalid_argument("budgets must be strictly increasing");
  }
};

namespace detail {

/// Accepted completions arrive as list continuations, so they often open with
/// whitespace and the next item number. Both are prompt scaffolding, not
/// reasoning content; strip them before the text becomes a Thought.
inline std::string normalize_thought_text(std::string_view raw) {
  std::string t = trim(raw);
  std::size_t i = 0;
  while (i < t.size() && i < 3 && t[i] >= '0' && t[i] <= '9') ++i;
  if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) {
    std::size_t j = i + 1;
    while (j < t.size() && (t[j] == ' ' || t[j] == '\t')) ++j;
    // Only a marker when whitespace follows; "3.5 is half" keeps its prefix.
    if (j > i + 1 && j < t.size()) t.erase(0, j);
  }
  return t;
}

}  // namespace detail

/**
 * Grow one trajectory from `prefix` (the tree root for a fresh attempt, an
 * interior node after backtracking). Thoughts are appended to `tree` tagged
 * with `iteration`; the returned trajectory's node_path runs root -> leaf.
 *
 * An accepted completion that is empty after normalization is retried once;
 * a second empty reply abandons the attempt as a depth-cap failure with the
 * degenerate flag set.
 */
inline Trajectory generate(PolicyEndpoint& endpoint, ReasoningTree& tree, const PrefixState& prefix,
                           const GenerationConfig& config, int iteration = 0) {
  config.validate();

  Trajectory traj;
  traj.iteration = iteration;
  traj.node_path = tree.path_to(prefix.node);
  std::vector<std::string> thoughts = tree.thoughts_below(prefix);
  NodeId tip = prefix.node;

  bool retried_empty = false;
  while (static_cast<int>(thoughts.size()) < config.max_depth) {
    CompletionRequest req;
    req.prompt = build_generation_prompt(tree.problem().question, thoughts);
    req.params = config.sampling;
    req.params.stop_sequences = config.stop_sequences;

    CompletionResult res;
    for (std::size_t b = 0; b < config.budgets.size(); ++b) {
      req.params.max_tokens = config.budgets[b];
      res = endpoint.complete(req);
      if (res.stop_reason != StopReason::Length) break;
      if (b + 1 == config.budgets.size()) break;  // last budget: truncated output is the thought
    }

    std::string text = detail::normalize_thought_text(res.text);
    if (text.empty()) {
      if (!retried_empty) {
        retried_empty = true;
        continue;
      }
      traj.degenerate = true;
      traj.terminal = TerminalStatus::max_depth();
      return traj;
    }
    retried_empty = false;

    tip = tree.append_thought(tip, text, iteration);
    traj.node_path.push_back(tip);
    thoughts.push_back(tree.node(tip).thought.text);

    if (auto boxed = extract_boxed(tree.node(tip).thought.text)) {
      traj.terminal = TerminalStatus::answered(*boxed);
      return traj;
    }
  }
  traj.terminal = TerminalStatus::max_depth();
  return traj;
}

}  // namespace ics
