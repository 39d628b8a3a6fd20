#pragma once

/**
 * Metrics over run records.
 *
 * Everything here is pure counting over immutable records; nothing calls an
 * endpoint. Undefined ratios (empty denominators) are std::nullopt and render
 * as a dash downstream, never as zero.
 *
 * Verification quality is scored on one event per record: the last gate
 * verdict the record carries (a budget-exhausted run's final trajectory is
 * never verified, so its event is the verdict on the preceding trajectory).
 * The positive class is "response is incorrect", so recall is the fraction
 * of incorrect responses flagged and specificity the fraction of correct
 * responses preserved. Buckets key on the record's terminal iteration.
 */

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ics/errors.hpp"
#include "ics/run_record.hpp"

namespace ics {

// ==================== Wilson score intervals ====================

inline constexpr double kWilsonZ = 1.959964;  // two-sided 95%

/// Wilson score interval for k successes in n trials. The k=0 and k=n
/// boundaries are exact by construction (the score inequality is tight
/// there), so they are returned as literal 0.0 / 1.0 rather than trusting
/// floating-point cancellation.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n) {
  if (n == 0) throw ZeroTrials();
  const double z = kWilsonZ;
  const double z2 = z * z;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = (z / denom) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  double lo = k == 0 ? 0.0 : center - half;
  double hi = k == n ? 1.0 : center + half;
  if (lo < 0.0) lo = 0.0;
  if (hi > 1.0) hi = 1.0;
  return {lo, hi};
}

/// A rate with its Wilson CI and the raw counts that produced it.
struct RateCI {
  double rate = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t successes = 0;
  std::size_t trials = 0;

  static RateCI of(std::size_t successes, std::size_t trials) {
    RateCI r;
    r.successes = successes;
    r.trials = trials;
    r.rate = static_cast<double>(successes) / static_cast<double>(trials);
    auto [lo, hi] = wilson_interval(successes, trials);
    r.lo = lo;
    r.hi = hi;
    return r;
  }
};

// ==================== verification quality ====================

struct VerificationEvent {
  int bucket = 0;   // terminal iteration of the record
  bool flagged = false;
  bool correct = false;  // was the judged trajectory's answer correct?
};

/// The scoring event for one record: its last gate verdict, paired with the
/// correctness of the trajectory that verdict judged. Records that were
/// never verified (failures, plain CoT arms) yield nothing.
inline std::optional<VerificationEvent> verification_event(const RunRecord& r) {
  if (r.failed) return std::nullopt;
  for (auto it = r.iterations.rbegin(); it != r.iterations.rend(); ++it) {
    if (!it->verdict_flagged) continue;
    return VerificationEvent{r.terminal_iteration, *it->verdict_flagged, it->answer_correct};
  }
  return std::nullopt;
}

struct VerificationCounts {
  std::size_t tp = 0;  // incorrect, flagged
  std::size_t fp = 0;  // correct, flagged
  std::size_t tn = 0;  // correct, preserved
  std::size_t fn = 0;  // incorrect, preserved

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(const VerificationEvent& e) {
    if (!e.correct && e.flagged) ++tp;
    else if (e.correct && e.flagged) ++fp;
    else if (e.correct && !e.flagged) ++tn;
    else ++fn;
  }
  void merge(const VerificationCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
  }
};

struct VerificationMetrics {
  VerificationCounts counts;
  std::optional<double> recall;       // tp / (tp + fn)
  std::optional<double> specificity;  // tn / (tn + fp)
  std::optional<double> accuracy;     // (tp + tn) / total

  static VerificationMetrics from(const VerificationCounts& c) {
    VerificationMetrics m;
    m.counts = c;
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0) m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    if (c.total() > 0) m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return m;
  }
};

inline std::map<int, VerificationMetrics> verification_metrics_by_iteration(
    const std::vector<RunRecord>& records) {
  std::map<int, VerificationCounts> counts;
  for (const RunRecord& r : records)
    if (auto e = verification_event(r)) counts[e->bucket].add(*e);
  std::map<int, VerificationMetrics> out;
  for (const auto& [bucket, c] : counts) out[bucket] = VerificationMetrics::from(c);
  return out;
}

inline VerificationMetrics verification_metrics_overall(const std::vector<RunRecord>& records) {
  VerificationCounts c;
  for (const RunRecord& r : records)
    if (auto e = verification_event(r)) c.add(*e);
  return VerificationMetrics::from(c);
}

// ==================== broke / fixed accounting ====================

struct BrokeFixed {
  std::size_t initially_correct = 0;
  std::size_t initially_incorrect = 0;
  std::size_t broke_count = 0;  // initially correct, finally incorrect
  std::size_t fixed_count = 0;  // initially incorrect, finally correct
  std::size_t total = 0;

  std::optional<double> broke;     // broke_count / initially_correct
  std::optional<double> fixed;     // fixed_count / initially_incorrect
  std::optional<double> net_lift;  // (fixed_count - broke_count) / total

  void add(const RunRecord& r) {
    ++total;
    if (r.initial_correct) {
      ++initially_correct;
      if (!r.final_correct) ++broke_count;
    } else {
      ++initially_incorrect;
      if (r.final_correct) ++fixed_count;
    }
  }
  void finalize() {
    if (initially_correct > 0)
      broke = static_cast<double>(broke_count) / static_cast<double>(initially_correct);
    if (initially_incorrect > 0)
      fixed = static_cast<double>(fixed_count) / static_cast<double>(initially_incorrect);
    if (total > 0)
      net_lift = (static_cast<double>(fixed_count) - static_cast<double>(broke_count)) /
                 static_cast<double>(total);
  }
};

inline BrokeFixed broke_fixed_pooled(const std::vector<RunRecord>& records) {
  BrokeFixed bf;
  for (const RunRecord& r : records)
    if (!r.failed) bf.add(r);
  bf.finalize();
  return bf;
}

inline std::map<ExitCondition, BrokeFixed> broke_fixed_by_exit(const std::vector<RunRecord>& records) {
  std::map<ExitCondition, BrokeFixed> out;
  for (const RunRecord& r : records)
    if (!r.failed) out[r.exit].add(r);
  for (auto& [exit, bf] : out) bf.finalize();
  return out;
}

// ==================== localization agreement ====================

struct ConsensusResult {
  int step = 0;
  bool unanimous = false;
  bool within1 = false;
  bool within2 = false;
  bool full_panel = true;  // false when fewer than three judges were usable
};

/// Combine independent judge localizations: the common step when they agree,
/// the earliest otherwise. Band flags report the maximum pairwise spread.
inline ConsensusResult oracle_consensus(const std::vector<int>& judge_steps) {
  if (judge_steps.empty()) throw std::invalid_argument("consensus needs at least one judge");
  int lo = judge_steps.front(), hi = judge_steps.front();
  for (int s : judge_steps) {
    if (s < lo) lo = s;
    if (s > hi) hi = s;
  }
  ConsensusResult out;
  out.step = lo;  // unanimity makes lo the common value
  int spread = hi - lo;
  out.unanimous = spread == 0;
  out.within1 = spread <= 1;
  out.within2 = spread <= 2;
  out.full_panel = judge_steps.size() >= 3;
  return out;
}

inline ConsensusResult oracle_consensus(int a, int b, int c) { return oracle_consensus({a, b, c}); }

struct PrefixClass {
  enum class Kind { Clean, Erroneous };
  Kind kind = Kind::Clean;
  int deviation = 0;  // self - oracle

  bool clean() const { return kind == Kind::Clean; }
};

/// A retained prefix is clean exactly when the model cut at or before the
/// true first error (self step <= oracle step).
inline PrefixClass classify_prefix(int self_step, int oracle_step) {
  PrefixClass out;
  out.deviation = self_step - oracle_step;
  out.kind = out.deviation <= 0 ? PrefixClass::Kind::Clean : PrefixClass::Kind::Erroneous;
  return out;
}

/// Positional agreement for quote-based localization: within a tolerance
/// fraction of the solution length.
inline bool token_agreement(std::size_t pos_a, std::size_t pos_b, std::size_t solution_length,
                            double tolerance_fraction = 0.10) {
  if (solution_length == 0) throw std::invalid_argument("token_agreement needs solution_length > 0");
  const double diff = pos_a >= pos_b ? static_cast<double>(pos_a - pos_b)
                                     : static_cast<double>(pos_b - pos_a);
  return diff <= tolerance_fraction * static_cast<double>(solution_length);
}

// ==================== per-correction analyses ====================

struct EditAccuracy {
  std::optional<RateCI> clean;
  std::optional<RateCI> erroneous;
};

/// Resample success by prefix class. One data point per correction that has
/// both a self step and an oracle step: the class of the retained prefix,
/// and whether the next iteration's answer was correct.
inline EditAccuracy edit_accuracy_by_prefix(const std::vector<RunRecord>& records) {
  std::size_t clean_n = 0, clean_k = 0, err_n = 0, err_k = 0;
  for (const RunRecord& r : records) {
    if (r.failed) continue;
    for (std::size_t i = 0; i + 1 < r.iterations.size(); ++i) {
      const IterationRecord& it = r.iterations[i];
      if (!it.resampled_from_step || !it.localized_step || !it.oracle_error_step) continue;
      bool success = r.iterations[i + 1].answer_correct;
      if (classify_prefix(*it.localized_step, *it.oracle_error_step).clean()) {
        ++clean_n;
        clean_k += success ? 1 : 0;
      } else {
        ++err_n;
        err_k += success ? 1 : 0;
      }
    }
  }
  EditAccuracy out;
  if (clean_n > 0) out.clean = RateCI::of(clean_k, clean_n);
  if (err_n > 0) out.erroneous = RateCI::of(err_k, err_n);
  return out;
}

struct ParseValidityPartition {
  std::size_t total = 0;           // localization events (model said ErrorAt)
  std::size_t oracle_valid = 0;    // events with a usable oracle localization
  std::size_t cleanly_parsed = 0;  // events whose step came from a boxed integer
  std::size_t intersection = 0;

  std::optional<double> oracle_valid_fraction;
  std::optional<double> cleanly_parsed_fraction;
  std::optional<double> intersection_fraction;
};

inline ParseValidityPartition parse_validity_partition(const std::vector<RunRecord>& records) {
  ParseValidityPartition out;
  for (const RunRecord& r : records) {
    if (r.failed) continue;
    for (const IterationRecord& it : r.iterations) {
      if (!it.localized_step) continue;
      ++out.total;
      bool oracle = it.oracle_error_step.has_value();
      bool clean = it.localization_clean_parse.value_or(false);
      if (oracle) ++out.oracle_valid;
      if (clean) ++out.cleanly_parsed;
      if (oracle && clean) ++out.intersection;
    }
  }
  if (out.total > 0) {
    const double t = static_cast<double>(out.total);
    out.oracle_valid_fraction = static_cast<double>(out.oracle_valid) / t;
    out.cleanly_parsed_fraction = static_cast<double>(out.cleanly_parsed) / t;
    out.intersection_fraction = static_cast<double>(out.intersection) / t;
  }
  return out;
}

// ==================== simple accuracy ====================

struct AccuracyPair {
  std::optional<double> initial;  // iteration 0 accuracy
  std::optional<double> final_;   // post-correction accuracy
  std::size_t total = 0;
};

inline AccuracyPair accuracy_summary(const std::vector<RunRecord>& records) {
  AccuracyPair out;
  std::size_t init = 0, fin = 0;
  for (const RunRecord& r : records) {
    if (r.failed) continue;
    ++out.total;
    init += r.initial_correct ? 1 : 0;
    fin += r.final_correct ? 1 : 0;
  }
  if (out.total > 0) {
    out.initial = static_cast<double>(init) / static_cast<double>(out.total);
    out.final_ = static_cast<double>(fin) / static_cast<double>(out.total);
  }
  return out;
}

}  // namespace ics
