// Command line driver for batch correction experiments.
//
// Verbs:
//   run       execute an experiment described by a JSON config file
//   report    rebuild the metric tables from an existing records file
//   validate  re-parse a records file or dataset against the schema
//
// API keys for http endpoints are read at request time from the environment
// variable named in the config (default ICS_API_KEY). The key itself is never
// written into configs, records, or reports.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ics/harness.hpp"
#include "ics/http_policy.hpp"
#include "ics/report.hpp"

namespace {

std::unique_ptr<ics::PolicyEndpoint> make_endpoint(const ics::ExperimentConfig& config) {
  if (config.endpoint.kind == "scripted") {
    if (config.endpoint.script_path.empty())
      throw ics::SchemaError("scripted endpoint needs a script file", 0);
    return ics::scripted_policy_from_file(config.endpoint.script_path);
  }
  if (config.endpoint.kind == "http") {
    const nlohmann::json& e = config.endpoint.http;
    ics::HttpPolicyConfig http;
    http.base_url = e.value("base_url", std::string());
    http.model = e.value("model", std::string());
    http.chat_path = e.value("chat_path", http.chat_path);
    if (e.contains("system_prompt") && !e.at("system_prompt").is_null())
      http.system_prompt = e.at("system_prompt").get<std::string>();
    http.api_key_env = e.value("api_key_env", http.api_key_env);
    http.timeout_s = e.value("timeout_s", http.timeout_s);
    http.retry_budget = e.value("retry_budget", http.retry_budget);
    http.backoff_base_ms = e.value("backoff_base_ms", http.backoff_base_ms);
    return std::make_unique<ics::HttpPolicy>(std::move(http));
  }
  throw ics::SchemaError("unknown endpoint kind: " + config.endpoint.kind, 0);
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& output,
            const std::optional<std::uint64_t>& seed, const std::optional<std::string>& method,
            const std::optional<std::size_t>& sample_size, const std::optional<int>& parallel) {
  ics::ExperimentConfig config = ics::load_config(config_path);
  if (output) config.output_dir = *output;
  if (seed) config.seed = *seed;
  if (sample_size) config.sample_size = *sample_size;
  if (parallel) config.parallel_problems = *parallel;
  if (method) {
    auto m = ics::parse_method(*method);
    if (!m) throw ics::SchemaError("unknown method: " + *method, 0);
    config.method = *m;
  }

  std::unique_ptr<ics::PolicyEndpoint> endpoint = make_endpoint(config);
  ics::RunSummary summary = ics::run_experiment(config, *endpoint);

  std::printf("problems:  %zu (%zu executed, %zu resumed)\n", summary.total_problems,
              summary.executed, summary.skipped_completed);
  std::printf("failures:  %zu\n", summary.failed_records);
  std::printf("records:   %s\n", summary.records_path.c_str());
  std::printf("report:    %s\n", summary.report_path.c_str());
  return 0;
}

int cmd_report(const std::string& records_path, const std::optional<std::string>& write_dir) {
  std::vector<ics::RunRecord> records = ics::load_records(records_path);
  ics::ReportTables tables = ics::build_report(records);
  std::fputs(tables.text.c_str(), stdout);
  if (write_dir) {
    std::filesystem::create_directories(*write_dir);
    ics::write_report_files(records, *write_dir);
    std::printf("\ntables written to %s\n", write_dir->c_str());
  }
  return 0;
}

int cmd_validate(const std::string& path, bool as_dataset) {
  if (as_dataset) {
    std::vector<ics::Problem> problems = ics::ingest_dataset(path);
    std::printf("ok: %zu problems\n", problems.size());
    return 0;
  }
  std::vector<ics::RunRecord> records = ics::load_records(path);
  std::size_t failed = 0;
  for (const ics::RunRecord& r : records) failed += r.failed ? 1 : 0;
  std::printf("ok: %zu records (%zu failed runs)\n", records.size(), failed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batch runner for inference-time self-correction experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<std::size_t> sample_size;
  std::optional<int> parallel;
  CLI::App* run = app.add_subcommand("run", "execute an experiment from a config file");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_option("--output", output, "override the output directory");
  run->add_option("--seed", seed, "override the sampling seed");
  run->add_option("--method", method,
                  "override the method (thought-ics, thought-ics-a, token-ics, self-refine, cove, cot)");
  run->add_option("--sample-size", sample_size, "override the per-dataset sample size");
  run->add_option("--parallel", parallel, "override the number of concurrent problems");

  std::string records_path;
  std::optional<std::string> write_dir;
  CLI::App* report = app.add_subcommand("report", "rebuild tables from records");
  report->add_option("records", records_path, "records.jsonl or a run directory")->required();
  report->add_option("--write", write_dir, "also rewrite the CSV tables into this directory");

  std::string validate_path;
  bool as_dataset = false;
  CLI::App* validate = app.add_subcommand("validate", "schema-check a records file or dataset");
  validate->add_option("path", validate_path, "records.jsonl, run directory, or dataset")->required();
  validate->add_flag("--dataset", as_dataset, "treat the path as a problem dataset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, output, seed, method, sample_size, parallel);
    if (report->parsed()) return cmd_report(records_path, write_dir);
    if (validate->parsed()) return cmd_validate(validate_path, as_dataset);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
