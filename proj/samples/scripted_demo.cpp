// Offline demonstration of the correction loop against a scripted policy.
// No network, no model: the "policy" replays canned completions, which makes
// the backtracking mechanics visible. Run it and read along:
//
//   iteration 0 reasons to a wrong answer in four steps,
//   the verifier flags it, the localizer blames step 3,
//   the loop rewinds to step 2 and regenerates, landing on the right answer.

#include <cstdio>
#include <string>
#include <vector>

#include "ics/correction_loop.hpp"
#include "ics/policy_client.hpp"
#include "ics/report.hpp"

using namespace ics;

namespace {

void print_record(const RunRecord& r) {
  std::printf("problem:   %s\n", r.problem_id.c_str());
  std::printf("method:    %s, gate %s\n", std::string(method_name(r.method)).c_str(),
              r.gate_name.c_str());
  for (const IterationRecord& it : r.iterations) {
    std::printf("  iteration %d: answer=%s%s", it.index,
                it.answer ? it.answer->c_str() : "(none)",
                it.answer_correct ? " (correct)" : "");
    if (it.verdict_flagged) std::printf(", verifier %s", *it.verdict_flagged ? "flagged" : "accepted");
    if (it.localized_step) std::printf(", first error at step %d", *it.localized_step);
    if (it.resampled_from_step) std::printf(", resampled from step %d", *it.resampled_from_step);
    std::printf("\n");
  }
  std::printf("exit:      %s\n", std::string(exit_condition_name(r.exit)).c_str());
  std::printf("answer:    %s -> %s\n\n", r.initial_answer ? r.initial_answer->c_str() : "(none)",
              r.final_answer ? r.final_answer->c_str() : "(none)");
}

}  // namespace

int main() {
  Problem p;
  p.id = "demo-1";
  p.question =
      "A cyclist rides 12 km at 24 km/h, rests for a quarter hour, then rides "
      "another 18 km at 12 km/h. How many minutes does the whole trip take?";
  p.gold_answer = "135";
  p.answer_mode = AnswerMode::ExactMath;
  p.dataset = "demo";

  // Iteration 0: a slip at step 3 (90 minutes misread as 60) carries through
  // to a wrong total. After the rewind, steps 3 and 4 are regenerated cleanly.
  ScriptedPolicy policy;
  policy.when_contains(
      "You are solving a problem step-by-step",
      {"The first leg takes 12/24 hours, which is 30 minutes.</thought>",
       "The rest adds 15 minutes, so 45 minutes so far.</thought>",
       "The second leg takes 18/12 = 1.5 hours, which I'll call 60 minutes.</thought>",
       "45 + 60 = 105, so the total is \\boxed{105} minutes.</thought>",
       "The second leg takes 18/12 = 1.5 hours, which is 90 minutes.</thought>",
       "45 + 90 = 135, so the total is \\boxed{135} minutes.</thought>"});
  // The verifier and localizer share a prompt, so the replies cycle across
  // both uses: gate vote (flag), localization (step 3), then the next gate
  // vote accepts with the 0 sentinel.
  policy.when_contains("You are given a reasoning trace",
                       {"Step 3 converts 1.5 hours incorrectly: \\boxed{3}",
                        "Step 3 converts 1.5 hours incorrectly: \\boxed{3}", "\\boxed{0}"});

  LoopConfig config;
  config.gate = GateStrategy::single();
  ThoughtIcsOutcome out = run_thought_ics(p, policy, config);

  std::printf("=== one problem, one correction ===\n\n");
  print_record(out.record);

  std::printf("reasoning tree (%zu nodes, %zu branch point%s):\n\n%s\n", out.tree.size(),
              out.tree.branch_points().size(), out.tree.branch_points().size() == 1 ? "" : "s",
              out.tree.serialize().c_str());

  std::printf("=== report over this single record ===\n\n");
  ReportTables tables = build_report({out.record});
  std::fputs(tables.text.c_str(), stdout);
  return 0;
}
