#pragma once

/**
 * Batch experiment harness.
 *
 * Datasets are line-delimited JSON problems. Each dataset is sampled
 * deterministically: the RNG is seeded with the experiment seed mixed with a
 * hash of the dataset name, so the same config always picks the same
 * problems, independent of platform (the bounded draw is rejection-sampled
 * rather than distribution-based, which the standard leaves unspecified).
 *
 * Records append to records.jsonl as problems finish; a rerun skips every
 * problem that already has a record, so interrupted runs resume. A torn
 * final line (crash mid-append) is dropped on resume and the problem rerun.
 * After the run, every persisted line is re-parsed as a validation pass and
 * the report files are rewritten from the full record set.
 */

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ics/baselines.hpp"
#include "ics/correction_loop.hpp"
#include "ics/errors.hpp"
#include "ics/report.hpp"
#include "ics/run_record.hpp"

namespace ics {

// ==================== configuration ====================

struct EndpointConfig {
  std::string kind = "scripted";  // "http" or "scripted"
  nlohmann::json http;            // HttpPolicyConfig fields, parsed lazily in the CLI
  std::string script_path;        // rule file for the scripted kind
};

struct ExperimentConfig {
  std::vector<std::string> dataset_paths;
  std::size_t sample_size = 100;  // honored only when the dataset is larger
  std::uint64_t seed = 0;
  Method method = Method::ThoughtICS;
  GateStrategy gate = GateStrategy::single();
  int max_iterations = 10;
  GenerationConfig generation;
  EndpointConfig endpoint;
  std::string output_dir = "run";
  int parallel_problems = 1;
};

inline GateStrategy gate_from_json(const nlohmann::json& j) {
  std::string name = j.value("strategy", "single");
  int k = j.value("k", 9);
  if (name == "single") return GateStrategy::single();
  if (name == "any") return GateStrategy::any(k);
  if (name == "majority") return GateStrategy::majority(k);
  if (name == "unanimous") return GateStrategy::unanimous(k);
  if (name == "oracle") return GateStrategy::oracle();
  throw SchemaError("unknown gate strategy: " + name, 0);
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.dataset_paths = j.at("datasets").get<std::vector<std::string>>();
  c.sample_size = j.value("sample_size", static_cast<std::size_t>(100));
  c.seed = j.value("seed", static_cast<std::uint64_t>(0));
  auto method = parse_method(j.value("method", "thought-ics"));
  if (!method) throw SchemaError("unknown method: " + j.value("method", ""), 0);
  c.method = *method;
  if (j.contains("gate")) c.gate = gate_from_json(j.at("gate"));
  c.max_iterations = j.value("max_iterations", 10);
  if (j.contains("generation")) {
    const nlohmann::json& g = j.at("generation");
    c.generation.max_depth = g.value("max_depth", 100);
    if (g.contains("budgets")) c.generation.budgets = g.at("budgets").get<std::vector<std::size_t>>();
    if (g.contains("stop_sequences"))
      c.generation.stop_sequences = g.at("stop_sequences").get<std::vector<std::string>>();
    c.generation.sampling.temperature = g.value("temperature", 0.5);
    c.generation.sampling.top_p = g.value("top_p", 0.9);
    c.generation.sampling.top_k = g.value("top_k", 50);
  }
  if (j.contains("endpoint")) {
    const nlohmann::json& e = j.at("endpoint");
    c.endpoint.kind = e.value("kind", "scripted");
    c.endpoint.script_path = e.value("script", std::string());
    c.endpoint.http = e;
  }
  c.output_dir = j.value("output_dir", std::string("run"));
  c.parallel_problems = j.value("parallel_problems", 1);
  if (c.parallel_problems < 1) c.parallel_problems = 1;
  c.generation.validate();
  c.gate.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file: " + path, 0);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw SchemaError("config file is not valid JSON: " + path, 0);
  return config_from_json(j);
}

// ==================== dataset ingestion and sampling ====================

inline std::vector<Problem> ingest_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset: " + path, 0);
  std::string stem = std::filesystem::path(path).stem().string();

  std::vector<Problem> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError("dataset line is not valid JSON", line_no);
    Problem p;
    try {
      p.id = j.at("id").get<std::string>();
      p.question = j.at("question").get<std::string>();
      p.gold_answer = j.at("gold_answer").get<std::string>();
      auto mode = parse_answer_mode(j.at("answer_mode").get<std::string>());
      if (!mode) throw std::runtime_error("unknown answer_mode");
      p.answer_mode = *mode;
      p.dataset = j.value("dataset", stem);
    } catch (const std::exception& e) {
      throw SchemaError(std::string("bad problem record: ") + e.what(), line_no);
    }
    if (p.id.empty()) throw SchemaError("problem id must be nonempty", line_no);
    if (!ids.insert(p.id).second) throw SchemaError("duplicate problem id: " + p.id, line_no);
    out.push_back(std::move(p));
  }
  return out;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace detail {

/// Unbiased bounded draw via rejection (uniform_int_distribution's sequence
/// is implementation-defined; this one is pinned by the standardized engine).
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace detail

/// Seeded uniform sample without replacement, original order preserved.
/// sample_size >= |problems| keeps everything.
inline std::vector<Problem> sample_problems(const std::vector<Problem>& problems, std::size_t sample_size,
                                            std::uint64_t seed) {
  if (sample_size >= problems.size()) return problems;
  std::vector<std::size_t> idx(problems.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < sample_size; ++i) {
    std::size_t j = i + static_cast<std::size_t>(detail::bounded_draw(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(sample_size);
  std::sort(idx.begin(), idx.end());
  std::vector<Problem> out;
  out.reserve(sample_size);
  for (std::size_t i : idx) out.push_back(problems[i]);
  return out;
}

// ==================== record files ====================

inline std::vector<RunRecord> load_records(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::is_directory(p)) p /= "records.jsonl";
  std::ifstream in(p);
  if (!in) throw SchemaError("cannot open records file: " + p.string(), 0);
  std::vector<RunRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    out.push_back(record_from_line(line, line_no));
  }
  return out;
}

namespace detail {

/// Completed problem ids from an existing records file. A torn final line is
/// removed from the file so the rerun can append a fresh record; a malformed
/// line anywhere else is corruption and raises.
inline std::set<std::string> load_completed(const std::filesystem::path& records_path) {
  std::set<std::string> done;
  std::ifstream in(records_path);
  if (!in) return done;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) lines.push_back(line);
  in.close();

  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      done.insert(record_from_line(lines[i], i + 1).problem_id);
    } catch (const SchemaError&) {
      if (i + 1 != lines.size()) throw;
      // torn tail: drop it and rerun that problem
      std::ofstream out(records_path, std::ios::trunc);
      for (std::size_t k = 0; k + 1 < lines.size(); ++k) out << lines[k] << '\n';
    }
  }
  return done;
}

inline std::string sanitize_filename(std::string_view id) {
  std::string out;
  for (char c : id)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "problem" : out;
}

}  // namespace detail

// ==================== experiment execution ====================

struct RunSummary {
  std::size_t total_problems = 0;
  std::size_t executed = 0;
  std::size_t skipped_completed = 0;
  std::size_t failed_records = 0;
  std::string records_path;
  std::string report_path;
};

/// One problem through the configured method. Thought-mode runs also persist
/// their tree next to the records.
inline RunRecord execute_problem(const Problem& problem, PolicyEndpoint& endpoint,
                                 const ExperimentConfig& config,
                                 const std::filesystem::path& trees_dir) {
  switch (config.method) {
    case Method::ThoughtICS:
    case Method::ThoughtICSA: {
      LoopConfig loop;
      loop.max_iterations = config.max_iterations;
      loop.gate = config.gate;
      loop.safeguard = config.method == Method::ThoughtICSA;
      loop.generation = config.generation;
      ThoughtIcsOutcome outcome = run_thought_ics(problem, endpoint, loop);
      if (!outcome.record.failed && !trees_dir.empty()) {
        std::string name = detail::sanitize_filename(problem.id) + ".tree";
        std::ofstream out(trees_dir / name, std::ios::trunc);
        out << outcome.tree.serialize();
        outcome.record.tree_ref = "trees/" + name;
      }
      return std::move(outcome.record);
    }
    case Method::TokenICS: {
      LoopConfig loop;
      loop.max_iterations = config.max_iterations;
      loop.gate = config.gate;
      return run_token_ics(problem, endpoint, loop);
    }
    case Method::SelfRefine:
      return run_self_refine(problem, endpoint, config.max_iterations);
    case Method::CoVe:
      return run_cove_factored(problem, endpoint).record;
    case Method::CoTOnly:
      return run_cot_only(problem, endpoint);
  }
  throw std::logic_error("unhandled method");
}

inline void write_report_files(const std::vector<RunRecord>& records,
                               const std::filesystem::path& out_dir) {
  ReportTables tables = build_report(records);
  std::ofstream(out_dir / "strategies.csv", std::ios::trunc) << tables.strategies_csv;
  std::ofstream(out_dir / "exit_conditions.csv", std::ios::trunc) << tables.exits_csv;
  std::ofstream(out_dir / "by_iteration.csv", std::ios::trunc) << tables.by_iteration_csv;
  std::ofstream(out_dir / "accuracy.csv", std::ios::trunc) << tables.accuracy_csv;
  std::ofstream(out_dir / "report.txt", std::ios::trunc) << tables.text;
}

inline RunSummary run_experiment(const ExperimentConfig& config, PolicyEndpoint& endpoint) {
  namespace fs = std::filesystem;
  fs::path out_dir(config.output_dir);
  fs::path trees_dir = out_dir / "trees";
  fs::create_directories(trees_dir);
  fs::path records_path = out_dir / "records.jsonl";

  // Sample each dataset with a seed tied to its name, then union.
  std::vector<Problem> problems;
  std::set<std::string> seen_ids;
  for (const std::string& path : config.dataset_paths) {
    std::vector<Problem> all = ingest_dataset(path);
    std::string name = all.empty() ? fs::path(path).stem().string() : all.front().dataset;
    for (Problem& p : sample_problems(all, config.sample_size, config.seed ^ fnv1a64(name))) {
      if (!seen_ids.insert(p.id).second)
        throw SchemaError("problem id appears in more than one dataset: " + p.id, 0);
      problems.push_back(std::move(p));
    }
  }

  std::set<std::string> completed = detail::load_completed(records_path);
  std::vector<const Problem*> todo;
  for (const Problem& p : problems)
    if (!completed.count(p.id)) todo.push_back(&p);

  RunSummary summary;
  summary.total_problems = problems.size();
  summary.skipped_completed = problems.size() - todo.size();
  summary.records_path = records_path.string();
  summary.report_path = (out_dir / "report.txt").string();

  std::ofstream appender(records_path, std::ios::app);
  if (!appender) throw SchemaError("cannot open records file for append: " + records_path.string(), 0);
  std::mutex append_mu;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> executed{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        RunRecord record = execute_problem(*todo[i], endpoint, config, trees_dir);
        std::lock_guard<std::mutex> lock(append_mu);
        appender << record_to_line(record) << '\n';
        appender.flush();
        ++executed;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int workers = config.parallel_problems;
  if (workers > static_cast<int>(todo.size())) workers = static_cast<int>(todo.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  appender.close();
  if (first_error) std::rethrow_exception(first_error);
  summary.executed = executed.load();

  // Validation pass: every persisted line must re-parse under the schema.
  std::vector<RunRecord> records = load_records(records_path.string());
  for (const RunRecord& r : records) summary.failed_records += r.failed ? 1 : 0;
  write_report_files(records, out_dir);
  return summary;
}

// ==================== scripted endpoint from a rule file ====================

/// Rule file: {"rules": [{"match": "contains"|"exact"|"ends_with",
/// "pattern": "...", "replies": ["...", ...]}, ...]}
inline std::unique_ptr<ScriptedPolicy> scripted_policy_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open script file: " + path, 0);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw SchemaError("script file is not valid JSON: " + path, 0);
  auto policy = std::make_unique<ScriptedPolicy>();
  for (const nlohmann::json& rule : j.at("rules")) {
    std::string match = rule.value("match", "contains");
    MatchKind kind;
    if (match == "contains") kind = MatchKind::Contains;
    else if (match == "exact") kind = MatchKind::Exact;
    else if (match == "ends_with") kind = MatchKind::EndsWith;
    else throw SchemaError("unknown match kind: " + match, 0);
    policy->add_rule(kind, rule.at("pattern").get<std::string>(),
                     rule.at("replies").get<std::vector<std::string>>());
  }
  return policy;
}

}  // namespace ics
