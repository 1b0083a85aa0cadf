#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pwb/assessment.hpp"
#include "pwb/corpus.hpp"
#include "pwb/gateway.hpp"
#include "pwb/metrics.hpp"
#include "pwb/prompting.hpp"

namespace pwb {

enum class PAdjust { none, bonferroni, holm };

struct EvalOptions {
  double hist_width = 10.0;  // default bins cover the schema range plus slack
  double hist_lo = 0.0;
  double hist_hi = 130.0;
  int permutation_iterations = 0;  // 0 disables the permutation p-values
  bool retention = true;
  PAdjust p_adjust = PAdjust::none;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  BackendConfig backend;
  std::optional<std::filesystem::path> template_path;
  ValidationMode mode = ValidationMode::strict;
  std::filesystem::path output_dir;
  EvalOptions metrics;
  std::uint64_t seed = 0;
};

struct FailureEntry {
  std::string record_id;
  std::string error_class;
  std::string detail;
};

struct AssessSummary {
  int n_records = 0;
  int n_ok = 0;
  int n_failed = 0;
  long backend_calls = 0;
  std::vector<FailureEntry> failures;
  std::map<std::string, long> flag_tallies;
};

// For each record: build prompt -> complete -> extract -> validate -> ground.
// Writes assessments.jsonl, raw_cache/ and manifest.json under output_dir.
// Re-runs are idempotent: cached completions produce zero backend calls.
AssessSummary run_assess(const RunConfig& config);

struct ModelEval {
  std::string model_id;
  std::string run_dir;
  int n_assessed = 0;
  int n_matched = 0;
  std::vector<FailureEntry> exclusions;  // one entry per unmatched corpus record
  std::optional<CorrelationResult> pcc;
  std::optional<CorrelationResult> scc;
  std::string corr_error;  // set when correlations are undefined (zero variance)
  std::optional<double> pcc_p_permutation;
  std::optional<double> scc_p_permutation;
  std::optional<double> pcc_p_adjusted;
  std::optional<double> scc_p_adjusted;
  std::optional<DescriptiveStats> pred_stats;
  std::optional<HistogramBins> pred_hist;
  std::vector<RetentionPoint> retention;
  std::vector<std::pair<std::string, long>> keywords;
  std::map<std::string, long> flag_tallies;
};

struct ReportBundle {
  int corpus_n = 0;
  std::optional<DescriptiveStats> truth_stats;
  std::optional<HistogramBins> truth_hist;
  std::vector<ModelEval> models;
  EvalOptions options;
};

// Reads assessments.jsonl + manifest.json from each run directory, matches
// against the corpus and computes the full metric set. Requires at least
// 3 matched pairs with ground truth per model.
ReportBundle run_evaluate(const std::vector<TranscriptRecord>& corpus,
                          const std::vector<std::filesystem::path>& run_dirs,
                          const EvalOptions& options);

// metrics.json, correlations.csv, retention.csv, histogram.csv, keywords.tsv,
// manifest.json and report.md. Deterministic bytes for a fixed bundle.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& out_dir);

std::string render_report(const ReportBundle& bundle);

nlohmann::json bundle_metrics_json(const ReportBundle& bundle);

// Pre-seed a completion cache with canned outputs (synth support).
void seed_completion_cache(const std::filesystem::path& cache_dir,
                           const std::string& model_id, double temperature,
                           const std::vector<TranscriptRecord>& records,
                           const std::vector<std::string>& outputs,
                           const PromptTemplate& tpl);

// JSON config file support for the CLI (--config).
RunConfig parse_run_config(const nlohmann::json& j);

}  // namespace pwb
