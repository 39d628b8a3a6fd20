#pragma once

/**
 * Report emission: fixed-shape tables over a set of run records.
 *
 * Two headline tables are shape-stable regardless of the data:
 *   - verification strategies: one row per gate (Single, Any, Majority,
 *     Unanimous) with recall / specificity / broke / fixed;
 *   - exit conditions: one row per termination condition with
 *     broke / fixed / net lift.
 * Both are emitted as CSV and as aligned plain text. Cells whose denominator
 * is empty render as a dash, never as 0.
 *
 * Pooled numbers are micro-averages (record union); per-dataset breakdowns
 * and their macro-average are emitted alongside. The initial-vs-correction
 * lift split appears only when plain-CoT reference records are present.
 */

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ics/evalkit.hpp"
#include "ics/run_record.hpp"

namespace ics {

inline constexpr const char* kStrategyTableHeader = "Method,Recall,Specificity,Broke,Fixed";
inline constexpr const char* kExitTableHeader = "Termination Condition,Broke,Fixed,Net Lift";

namespace detail {

inline std::string pct(std::optional<double> v, bool sign = false) {
  if (!v) return "—";  // em dash placeholder for undefined
  char buf[32];
  if (sign)
    std::snprintf(buf, sizeof buf, "%+.1f%%", *v * 100.0);
  else
    std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_escape(cells[i]);
  }
  out += '\n';
  return out;
}

/// Columns count in code points, not bytes, so the multi-byte dash
/// placeholder lines up with ASCII cells.
inline std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

/// Aligned plain-text rendering of rows already shaped like the CSV.
inline std::string text_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (display_width(row[i]) > widths[i]) widths[i] = display_width(row[i]);
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size()) out.append(widths[i] - display_width(row[i]) + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

struct ReportTables {
  std::string strategies_csv;
  std::string exits_csv;
  std::string by_iteration_csv;
  std::string accuracy_csv;
  std::string text;
};

/// Strategy table rows, in the fixed order the header promises.
inline std::vector<std::vector<std::string>> strategy_table_rows(const std::vector<RunRecord>& records) {
  static const char* kGates[] = {"Single", "Any", "Majority", "Unanimous"};
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Method", "Recall", "Specificity", "Broke", "Fixed"});
  for (const char* gate : kGates) {
    std::vector<RunRecord> subset;
    for (const RunRecord& r : records)
      if (!r.failed && r.gate_name == gate) subset.push_back(r);
    VerificationMetrics vm = verification_metrics_overall(subset);
    BrokeFixed bf = broke_fixed_pooled(subset);
    rows.push_back({gate, detail::pct(vm.recall), detail::pct(vm.specificity), detail::pct(bf.broke),
                    detail::pct(bf.fixed)});
  }
  return rows;
}

/// Exit-condition table rows, fixed order.
inline std::vector<std::vector<std::string>> exit_table_rows(const std::vector<RunRecord>& records) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Termination Condition", "Broke", "Fixed", "Net Lift"});
  std::map<ExitCondition, BrokeFixed> by_exit = broke_fixed_by_exit(records);
  struct RowDef {
    ExitCondition exit;
    const char* label;
  };
  static const RowDef kRows[] = {{ExitCondition::VerifiedAccuracy, "(1) Verified Accuracy"},
                                 {ExitCondition::VLDisagreement, "(2) V/L Disagreement"},
                                 {ExitCondition::MaxIter, "(3) MaxIter"}};
  for (const RowDef& def : kRows) {
    auto it = by_exit.find(def.exit);
    if (it == by_exit.end()) {
      rows.push_back({def.label, "—", "—", "—"});
    } else {
      rows.push_back({def.label, detail::pct(it->second.broke), detail::pct(it->second.fixed),
                      detail::pct(it->second.net_lift, true)});
    }
  }
  return rows;
}

inline std::vector<std::vector<std::string>> iteration_table_rows(const std::vector<RunRecord>& records) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Terminal Iteration", "Recall", "Specificity", "Accuracy", "Records"});
  for (const auto& [bucket, m] : verification_metrics_by_iteration(records)) {
    rows.push_back({std::to_string(bucket), detail::pct(m.recall), detail::pct(m.specificity),
                    detail::pct(m.accuracy), std::to_string(m.counts.total())});
  }
  return rows;
}

/// Accuracy per dataset plus pooled micro and per-dataset macro averages.
/// The initial/correction lift split needs a plain-CoT reference arm; rows
/// for it appear only when such records exist.
inline std::vector<std::vector<std::string>> accuracy_table_rows(const std::vector<RunRecord>& records) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Dataset", "Initial", "Final", "Correction Lift", "Records"});

  std::vector<RunRecord> method_records, cot_records;
  for (const RunRecord& r : records) {
    if (r.failed) continue;
    (r.method == Method::CoTOnly ? cot_records : method_records).push_back(r);
  }

  std::map<std::string, std::vector<RunRecord>> by_dataset;
  for (const RunRecord& r : method_records) by_dataset[r.dataset].push_back(r);

  double macro_initial = 0.0, macro_final = 0.0;
  std::size_t macro_n = 0;
  for (const auto& [dataset, subset] : by_dataset) {
    AccuracyPair acc = accuracy_summary(subset);
    std::optional<double> lift;
    if (acc.initial && acc.final_) {
      lift = *acc.final_ - *acc.initial;
      macro_initial += *acc.initial;
      macro_final += *acc.final_;
      ++macro_n;
    }
    rows.push_back({dataset.empty() ? "(unnamed)" : dataset, detail::pct(acc.initial),
                    detail::pct(acc.final_), detail::pct(lift, true), std::to_string(acc.total)});
  }

  AccuracyPair pooled = accuracy_summary(method_records);
  std::optional<double> pooled_lift;
  if (pooled.initial && pooled.final_) pooled_lift = *pooled.final_ - *pooled.initial;
  rows.push_back({"pooled (micro)", detail::pct(pooled.initial), detail::pct(pooled.final_),
                  detail::pct(pooled_lift, true), std::to_string(pooled.total)});
  if (macro_n > 0) {
    double mi = macro_initial / static_cast<double>(macro_n);
    double mf = macro_final / static_cast<double>(macro_n);
    rows.push_back({"datasets (macro)", detail::pct(mi), detail::pct(mf), detail::pct(mf - mi, true),
                    std::to_string(macro_n)});
  }

  if (!cot_records.empty() && pooled.initial) {
    AccuracyPair cot = accuracy_summary(cot_records);
    if (cot.initial) {
      rows.push_back({"reference CoT", detail::pct(cot.initial), detail::pct(cot.final_), "—",
                      std::to_string(cot.total)});
      rows.push_back({"initial lift vs CoT", detail::pct(*pooled.initial - *cot.initial, true), "", "",
                      ""});
    }
  }
  return rows;
}

inline ReportTables build_report(const std::vector<RunRecord>& records) {
  ReportTables out;

  auto strategies = strategy_table_rows(records);
  auto exits = exit_table_rows(records);
  auto iterations = iteration_table_rows(records);
  auto accuracy = accuracy_table_rows(records);

  for (const auto& row : strategies) out.strategies_csv += detail::join_row(row);
  for (const auto& row : exits) out.exits_csv += detail::join_row(row);
  for (const auto& row : iterations) out.by_iteration_csv += detail::join_row(row);
  for (const auto& row : accuracy) out.accuracy_csv += detail::join_row(row);

  std::size_t failed = 0;
  for (const RunRecord& r : records) failed += r.failed ? 1 : 0;

  out.text += "Verification strategies\n";
  out.text += detail::text_table(strategies);
  out.text += "\nTermination conditions\n";
  out.text += detail::text_table(exits);
  out.text += "\nBy terminal iteration\n";
  out.text += detail::text_table(iterations);
  out.text += "\nAccuracy\n";
  out.text += detail::text_table(accuracy);
  out.text += "\nRecords: " + std::to_string(records.size()) + " (" + std::to_string(failed) +
              " failed, excluded from metrics)\n";
  return out;
}

}  // namespace ics
