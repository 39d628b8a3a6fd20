#pragma once

/**
 * RunRecord: one problem's trip through a correction method, as persisted.
 *
 * A record carries one IterationRecord per trajectory (iteration 0 is the
 * initial generation, the rest are correction attempts), the exit condition,
 * and the initial/final answers with their correctness against gold. Records
 * are append-only JSON lines; the schema is versioned and every field the
 * metrics need is stored explicitly so reports can be recomputed without
 * rerunning inference.
 *
 * Invariants enforced by validate():
 *   terminal_iteration = |iterations| - 1
 *   safeguard_applied ⇒ exit ∈ {VLDisagreement, MaxIter} and
 *                       final_answer = initial_answer byte-for-byte
 */

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ics/answer_kit.hpp"
#include "ics/errors.hpp"

namespace ics {

enum class Method { ThoughtICS, ThoughtICSA, TokenICS, SelfRefine, CoVe, CoTOnly };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::ThoughtICS: return "thought-ics";
    case Method::ThoughtICSA: return "thought-ics-a";
    case Method::TokenICS: return "token-ics";
    case Method::SelfRefine: return "self-refine";
    case Method::CoVe: return "cove";
    case Method::CoTOnly: return "cot";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "thought-ics") return Method::ThoughtICS;
  if (s == "thought-ics-a") return Method::ThoughtICSA;
  if (s == "token-ics") return Method::TokenICS;
  if (s == "self-refine") return Method::SelfRefine;
  if (s == "cove") return Method::CoVe;
  if (s == "cot") return Method::CoTOnly;
  return std::nullopt;
}

enum class ExitCondition { VerifiedAccuracy, VLDisagreement, MaxIter };

inline std::string_view exit_condition_name(ExitCondition e) {
  switch (e) {
    case ExitCondition::VerifiedAccuracy: return "verified_accuracy";
    case ExitCondition::VLDisagreement: return "vl_disagreement";
    case ExitCondition::MaxIter: return "max_iter";
  }
  return "?";
}

inline std::optional<ExitCondition> parse_exit_condition(std::string_view s) {
  if (s == "verified_accuracy") return ExitCondition::VerifiedAccuracy;
  if (s == "vl_disagreement") return ExitCondition::VLDisagreement;
  if (s == "max_iter") return ExitCondition::MaxIter;
  return std::nullopt;
}

/// One trajectory's bookkeeping. Verification and localization fields are
/// optional because the last trajectory of a budget-exhausted run is never
/// verified, and accepted trajectories are never localized.
struct IterationRecord {
  int index = 0;
  std::optional<std::string> answer;        // extracted boxed answer, if any
  bool answer_correct = false;              // vs gold; missing answer counts incorrect

  std::optional<bool> verdict_flagged;      // gate outcome on this trajectory
  std::vector<bool> verdict_votes;          // per-sample judged-incorrect (empty for Oracle)
  int verdict_unparseable_votes = 0;

  std::optional<int> localized_step;        // first erroneous step per the model
  bool localization_no_error = false;       // localizer returned the 0 sentinel
  std::optional<bool> localization_clean_parse;
  bool localization_unparseable = false;

  std::optional<int> resampled_from_step;   // backtrack target feeding the next iteration
  std::optional<std::size_t> truncation_offset;  // unstructured arm: quote match offset
  std::optional<int> oracle_error_step;     // offline oracle-consensus localization, if run

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct RunRecord {
  int schema_version = 1;
  std::string problem_id;
  std::string dataset;
  Method method = Method::ThoughtICS;
  std::string gate_name = "Single";
  std::string gold_answer;
  AnswerMode answer_mode = AnswerMode::ExactMath;

  std::vector<IterationRecord> iterations;
  ExitCondition exit = ExitCondition::VerifiedAccuracy;
  std::optional<std::string> initial_answer;
  std::optional<std::string> final_answer;
  bool initial_correct = false;
  bool final_correct = false;
  bool safeguard_applied = false;
  int terminal_iteration = 0;

  bool failed = false;               // endpoint failure: no usable iterations
  std::string failure_reason;
  std::vector<std::string> flags;    // anomalies worth keeping: malformed feedback, zero questions, ...
  std::optional<std::string> tree_ref;  // persisted tree file, structured arms only

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline void validate(const RunRecord& r) {
  if (r.failed) return;  // failure records carry no loop invariants
  if (r.iterations.empty()) throw SchemaError("record has no iterations", 0);
  if (r.terminal_iteration != static_cast<int>(r.iterations.size()) - 1)
    throw SchemaError("terminal_iteration must equal |iterations| - 1", 0);
  if (r.safeguard_applied) {
    if (r.exit == ExitCondition::VerifiedAccuracy)
      throw SchemaError("safeguard never applies to a verified-accuracy exit", 0);
    if (r.initial_answer != r.final_answer)
      throw SchemaError("safeguard requires final answer = initial answer", 0);
  }
}

// ==================== JSON round-trip ====================

namespace detail {

inline nlohmann::json opt_str(const std::optional<std::string>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
inline nlohmann::json opt_int(const std::optional<int>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
inline nlohmann::json opt_bool(const std::optional<bool>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const IterationRecord& it) {
  nlohmann::json j = {{"index", it.index},
                      {"answer", detail::opt_str(it.answer)},
                      {"answer_correct", it.answer_correct},
                      {"verdict_flagged", detail::opt_bool(it.verdict_flagged)},
                      {"verdict_votes", it.verdict_votes},
                      {"verdict_unparseable_votes", it.verdict_unparseable_votes},
                      {"localized_step", detail::opt_int(it.localized_step)},
                      {"localization_no_error", it.localization_no_error},
                      {"localization_clean_parse", detail::opt_bool(it.localization_clean_parse)},
                      {"localization_unparseable", it.localization_unparseable},
                      {"resampled_from_step", detail::opt_int(it.resampled_from_step)},
                      {"oracle_error_step", detail::opt_int(it.oracle_error_step)}};
  j["truncation_offset"] =
      it.truncation_offset ? nlohmann::json(*it.truncation_offset) : nlohmann::json(nullptr);
  return j;
}

inline IterationRecord iteration_from_json(const nlohmann::json& j) {
  IterationRecord it;
  it.index = j.at("index").get<int>();
  it.answer = detail::get_opt<std::string>(j, "answer");
  it.answer_correct = j.at("answer_correct").get<bool>();
  it.verdict_flagged = detail::get_opt<bool>(j, "verdict_flagged");
  it.verdict_votes = j.value("verdict_votes", std::vector<bool>{});
  it.verdict_unparseable_votes = j.value("verdict_unparseable_votes", 0);
  it.localized_step = detail::get_opt<int>(j, "localized_step");
  it.localization_no_error = j.value("localization_no_error", false);
  it.localization_clean_parse = detail::get_opt<bool>(j, "localization_clean_parse");
  it.localization_unparseable = j.value("localization_unparseable", false);
  it.resampled_from_step = detail::get_opt<int>(j, "resampled_from_step");
  it.truncation_offset = detail::get_opt<std::size_t>(j, "truncation_offset");
  it.oracle_error_step = detail::get_opt<int>(j, "oracle_error_step");
  return it;
}

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json its = nlohmann::json::array();
  for (const IterationRecord& it : r.iterations) its.push_back(to_json(it));
  return {{"schema_version", r.schema_version},
          {"problem_id", r.problem_id},
          {"dataset", r.dataset},
          {"method", std::string(method_name(r.method))},
          {"gate", r.gate_name},
          {"gold_answer", r.gold_answer},
          {"answer_mode", std::string(answer_mode_name(r.answer_mode))},
          {"iterations", std::move(its)},
          {"exit", std::string(exit_condition_name(r.exit))},
          {"initial_answer", detail::opt_str(r.initial_answer)},
          {"final_answer", detail::opt_str(r.final_answer)},
          {"initial_correct", r.initial_correct},
          {"final_correct", r.final_correct},
          {"safeguard_applied", r.safeguard_applied},
          {"terminal_iteration", r.terminal_iteration},
          {"failed", r.failed},
          {"failure_reason", r.failure_reason},
          {"flags", r.flags},
          {"tree_ref", detail::opt_str(r.tree_ref)}};
}

inline RunRecord record_from_json(const nlohmann::json& j, std::size_t line = 0) {
  try {
    RunRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != 1)
      throw SchemaError("unsupported record schema_version " + std::to_string(r.schema_version), line);
    r.problem_id = j.at("problem_id").get<std::string>();
    r.dataset = j.value("dataset", std::string());
    auto method = parse_method(j.at("method").get<std::string>());
    if (!method) throw SchemaError("unknown method in record", line);
    r.method = *method;
    r.gate_name = j.value("gate", std::string("Single"));
    r.gold_answer = j.at("gold_answer").get<std::string>();
    auto mode = parse_answer_mode(j.at("answer_mode").get<std::string>());
    if (!mode) throw SchemaError("unknown answer_mode in record", line);
    r.answer_mode = *mode;
    for (const nlohmann::json& it : j.at("iterations")) r.iterations.push_back(iteration_from_json(it));
    auto exit = parse_exit_condition(j.at("exit").get<std::string>());
    if (!exit) throw SchemaError("unknown exit condition in record", line);
    r.exit = *exit;
    r.initial_answer = detail::get_opt<std::string>(j, "initial_answer");
    r.final_answer = detail::get_opt<std::string>(j, "final_answer");
    r.initial_correct = j.at("initial_correct").get<bool>();
    r.final_correct = j.at("final_correct").get<bool>();
    r.safeguard_applied = j.at("safeguard_applied").get<bool>();
    r.terminal_iteration = j.at("terminal_iteration").get<int>();
    r.failed = j.value("failed", false);
    r.failure_reason = j.value("failure_reason", std::string());
    r.flags = j.value("flags", std::vector<std::string>{});
    r.tree_ref = detail::get_opt<std::string>(j, "tree_ref");
    validate(r);
    return r;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("bad run record: ") + e.what(), line);
  }
}

inline std::string record_to_line(const RunRecord& r) { return to_json(r).dump(); }

inline RunRecord record_from_line(std::string_view line, std::size_t line_number = 0) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw SchemaError("record line is not valid JSON", line_number);
  return record_from_json(j, line_number);
}

}  // namespace ics
