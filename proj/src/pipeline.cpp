#include "pwb/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pwb {

using nlohmann::json;

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

json stats_to_json(const DescriptiveStats& s) {
  return json{{"mean", s.mean},   {"median", s.median}, {"std", s.std_dev},
              {"min", s.min},     {"max", s.max},       {"n", s.n}};
}

json hist_to_json(const HistogramBins& h) {
  return json{{"bin_width", h.bin_width},
              {"range_lo", h.range_lo},
              {"range_hi", h.range_hi},
              {"counts", h.counts},
              {"out_of_range", h.out_of_range}};
}

json corr_to_json(const CorrelationResult& c) {
  return json{{"method", c.method == CorrMethod::pearson ? "pearson" : "spearman"},
              {"coefficient", c.coefficient},
              {"p_value", c.p_value},
              {"n", c.n},
              {"p_method", c.p_method == PMethod::t_approx ? "t_approx" : "permutation"}};
}

json failures_to_json(const std::vector<FailureEntry>& failures) {
  json arr = json::array();
  for (const auto& f : failures) {
    arr.push_back(json{{"record_id", f.record_id},
                       {"class", f.error_class},
                       {"detail", f.detail}});
  }
  return arr;
}

std::string sanitize_label(std::string_view s) {
  std::string out;
  for (char c : s) {
    const unsigned char uc = static_cast<unsigned char>(c);
    out.push_back(std::isalnum(uc) || c == '.' || c == '-' ? c : '_');
  }
  return out.empty() ? std::string("model") : out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

}  // namespace

AssessSummary run_assess(const RunConfig& config) {
  const auto records = load_corpus(config.corpus_path, config.corpus_format);

  PromptTemplate tpl =
      config.template_path ? load_template_file(*config.template_path) : default_template();
  if (const auto defects = validate_template(tpl); !defects.empty()) {
    std::string msg = "invalid prompt template:";
    for (const auto& d : defects) msg += " " + d + ";";
    throw PromptError(msg);
  }

  std::filesystem::create_directories(config.output_dir);
  BackendConfig backend = config.backend;
  if (backend.cache_dir.empty()) backend.cache_dir = config.output_dir / "raw_cache";
  LlmGateway gateway(backend);

  AssessSummary summary;
  summary.n_records = static_cast<int>(records.size());

  // Prompt construction failures (empty transcripts) are per-record failures,
  // not run aborts.
  std::vector<std::pair<std::string, std::string>> prompts;
  std::unordered_map<std::string, const TranscriptRecord*> by_id;
  for (const auto& rec : records) {
    by_id[rec.id] = &rec;
    try {
      prompts.emplace_back(rec.id, build_prompt(tpl, rec.text));
    } catch (const PromptError& e) {
      summary.failures.push_back({rec.id, "empty_transcript", e.what()});
    }
  }

  const auto completions = gateway.assess_batch(prompts);
  summary.backend_calls = gateway.backend_calls();

  std::unordered_map<std::string, GroundedAssessment> grounded_by_id;
  for (const auto& completion : completions) {
    const TranscriptRecord& rec = *by_id.at(completion.record_id);
    if (completion.status != CompletionStatus::ok) {
      summary.failures.push_back({rec.id, std::string(completion_error_name(completion.error)),
                                  completion.error_detail});
      continue;
    }
    try {
      const ExtractedJson extracted = extract_json(completion.content);
      AssessmentResult result = validate_assessment(extracted.object, rec.id, config.mode);
      if (extracted.repaired) {
        ++summary.flag_tallies["repaired_json"];
        // strict-mode results keep empty validation flags; the repair is
        // recorded in the manifest tally above
        if (config.mode == ValidationMode::lenient) result.flags.repaired_json = true;
      }
      if (result.flags.out_of_range_clamped) ++summary.flag_tallies["out_of_range_clamped"];
      if (result.flags.missing_dimension_defaulted)
        ++summary.flag_tallies["missing_dimension_defaulted"];
      grounded_by_id.emplace(rec.id, ground_keywords(result, rec.text));
    } catch (const ExtractError& e) {
      summary.failures.push_back({rec.id, "extract_error", e.what()});
    } catch (const ValidationError& e) {
      summary.failures.push_back({rec.id, "validation:" + e.error_class(), e.what()});
    }
  }

  // assessments.jsonl holds the successes, in corpus order
  std::ostringstream lines;
  for (const auto& rec : records) {
    const auto it = grounded_by_id.find(rec.id);
    if (it == grounded_by_id.end()) continue;
    lines << grounded_to_json(it->second).dump() << "\n";
    ++summary.n_ok;
  }
  summary.n_failed = static_cast<int>(summary.failures.size());
  write_text_file(config.output_dir / "assessments.jsonl", lines.str());

  json manifest;
  manifest["assess"] = {
      {"model_id", backend.model_id},
      {"backend", backend.kind == BackendKind::mock ? "mock" : "http_openai_compatible"},
      {"temperature", backend.temperature},
      {"mode", config.mode == ValidationMode::strict ? "strict" : "lenient"},
      {"seed", config.seed},
      {"template", config.template_path ? config.template_path->string() : "default"},
      {"corpus", config.corpus_path.string()},
      {"n_records", summary.n_records},
      {"n_ok", summary.n_ok},
      {"n_failed", summary.n_failed},
      {"backend_calls", summary.backend_calls},
      {"failures", failures_to_json(summary.failures)},
      {"flag_tallies", summary.flag_tallies},
  };
  write_text_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

namespace {

struct LoadedRun {
  std::string model_id;
  std::string run_dir;
  std::vector<GroundedAssessment> assessments;  // file order
  std::vector<FailureEntry> assess_failures;
};

LoadedRun load_run(const std::filesystem::path& run_dir) {
  LoadedRun run;
  run.run_dir = run_dir.string();
  run.model_id = sanitize_label(run_dir.filename().string());

  const auto manifest_path = run_dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    const json manifest = read_json_file(manifest_path);
    if (manifest.contains("assess")) {
      const json& a = manifest["assess"];
      run.model_id = a.value("model_id", run.model_id);
      for (const auto& f : a.value("failures", json::array())) {
        run.assess_failures.push_back({f.value("record_id", ""), f.value("class", ""),
                                       f.value("detail", "")});
      }
    }
  }

  const auto assessments_path = run_dir / "assessments.jsonl";
  std::ifstream in(assessments_path);
  if (!in) throw std::runtime_error("cannot open " + assessments_path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      run.assessments.push_back(grounded_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(assessments_path.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return run;
}

}  // namespace

ReportBundle run_evaluate(const std::vector<TranscriptRecord>& corpus,
                          const std::vector<std::filesystem::path>& run_dirs,
                          const EvalOptions& options) {
  if (corpus.empty()) throw std::runtime_error("run_evaluate: empty corpus");

  std::unordered_map<std::string, const TranscriptRecord*> corpus_by_id;
  for (const auto& rec : corpus) corpus_by_id[rec.id] = &rec;

  ReportBundle bundle;
  bundle.corpus_n = static_cast<int>(corpus.size());
  bundle.options = options;

  {
    std::vector<double> truth;
    for (const auto& rec : corpus)
      if (rec.ground_truth_ryff) truth.push_back(static_cast<double>(*rec.ground_truth_ryff));
    if (!truth.empty()) {
      bundle.truth_stats = descriptive_stats(truth);
      bundle.truth_hist = histogram(truth, options.hist_width, options.hist_lo, options.hist_hi);
    }
  }

  for (const auto& run_dir : run_dirs) {
    LoadedRun run = load_run(run_dir);

    ModelEval eval;
    eval.model_id = run.model_id;
    eval.run_dir = run.run_dir;
    eval.n_assessed = static_cast<int>(run.assessments.size());

    std::unordered_map<std::string, const GroundedAssessment*> assessed_by_id;
    for (const auto& g : run.assessments) {
      if (!corpus_by_id.count(g.base.record_id))
        throw std::runtime_error("assessment id \"" + g.base.record_id +
                                 "\" is not in the corpus");
      assessed_by_id[g.base.record_id] = &g;
      for (const auto& flag : g.base.flags.names()) ++eval.flag_tallies[flag];
    }
    std::unordered_map<std::string, const FailureEntry*> failure_by_id;
    for (const auto& f : run.assess_failures) failure_by_id[f.record_id] = &f;

    // correlation vectors in corpus order; every unmatched record gets
    // exactly one exclusion entry so matched + excluded == corpus size
    std::vector<double> pred, truth;
    std::vector<std::string> ids;
    for (const auto& rec : corpus) {
      const auto assessed = assessed_by_id.find(rec.id);
      if (assessed != assessed_by_id.end() && rec.ground_truth_ryff) {
        pred.push_back(static_cast<double>(assessed->second->base.total));
        truth.push_back(static_cast<double>(*rec.ground_truth_ryff));
        ids.push_back(rec.id);
        continue;
      }
      if (const auto fail = failure_by_id.find(rec.id); fail != failure_by_id.end()) {
        eval.exclusions.push_back(*fail->second);
      } else if (assessed == assessed_by_id.end()) {
        eval.exclusions.push_back({rec.id, "not_assessed", "no assessment for record"});
      } else {
        eval.exclusions.push_back(
            {rec.id, "missing_ground_truth", "record has no ground-truth score"});
      }
    }
    eval.n_matched = static_cast<int>(pred.size());
    if (eval.n_matched < 3)
      throw std::runtime_error("model " + eval.model_id + ": fewer than 3 matched pairs (" +
                               std::to_string(eval.n_matched) + ")");

    try {
      eval.pcc = pearson(pred, truth);
      eval.scc = spearman(pred, truth);
      if (options.permutation_iterations > 0) {
        const std::uint64_t perm_seed = options.seed ^ fnv1a64(eval.model_id);
        eval.pcc_p_permutation = p_value_permutation(
            pred, truth, CorrMethod::pearson, options.permutation_iterations, perm_seed);
        eval.scc_p_permutation = p_value_permutation(
            pred, truth, CorrMethod::spearman, options.permutation_iterations, perm_seed + 1);
      }
    } catch (const ZeroVarianceError&) {
      eval.corr_error = "zero_variance";
      eval.pcc.reset();
      eval.scc.reset();
    }

    if (options.retention) {
      eval.retention = retention_curve(pred, truth, ids);
    }

    {
      // score statistics cover every successful assessment, matched or not;
      // correlations use the matched subset only
      std::vector<double> totals;
      totals.reserve(run.assessments.size());
      for (const auto& g : run.assessments)
        totals.push_back(static_cast<double>(g.base.total));
      if (!totals.empty()) {
        eval.pred_stats = descriptive_stats(totals);
        eval.pred_hist =
            histogram(totals, options.hist_width, options.hist_lo, options.hist_hi);
      }
    }

    eval.keywords = keyword_frequencies(run.assessments);
    bundle.models.push_back(std::move(eval));
  }

  if (options.p_adjust != PAdjust::none) {
    std::vector<double> family;
    for (const auto& m : bundle.models) {
      if (m.pcc) family.push_back(m.pcc->p_value);
      if (m.scc) family.push_back(m.scc->p_value);
    }
    const auto adjusted = options.p_adjust == PAdjust::bonferroni ? adjust_bonferroni(family)
                                                                  : adjust_holm(family);
    std::size_t k = 0;
    for (auto& m : bundle.models) {
      if (m.pcc) m.pcc_p_adjusted = adjusted[k++];
      if (m.scc) m.scc_p_adjusted = adjusted[k++];
    }
  }

  return bundle;
}

json bundle_metrics_json(const ReportBundle& bundle) {
  json j;
  j["corpus"]["n"] = bundle.corpus_n;
  if (bundle.truth_stats) j["corpus"]["ground_truth"] = stats_to_json(*bundle.truth_stats);
  if (bundle.truth_hist) j["corpus"]["histogram"] = hist_to_json(*bundle.truth_hist);

  json models = json::array();
  for (const auto& m : bundle.models) {
    json e;
    e["model_id"] = m.model_id;
    e["n_assessed"] = m.n_assessed;
    e["n_matched"] = m.n_matched;
    e["n_excluded"] = m.exclusions.size();
    if (m.pcc) e["pcc"] = corr_to_json(*m.pcc);
    if (m.scc) e["scc"] = corr_to_json(*m.scc);
    if (!m.corr_error.empty()) e["correlation_error"] = m.corr_error;
    if (m.pcc_p_permutation) e["pcc_p_permutation"] = *m.pcc_p_permutation;
    if (m.scc_p_permutation) e["scc_p_permutation"] = *m.scc_p_permutation;
    if (m.pcc_p_adjusted) e["pcc_p_adjusted"] = *m.pcc_p_adjusted;
    if (m.scc_p_adjusted) e["scc_p_adjusted"] = *m.scc_p_adjusted;
    if (m.pred_stats) e["stats"] = stats_to_json(*m.pred_stats);
    if (m.pred_hist) e["histogram"] = hist_to_json(*m.pred_hist);
    e["flag_tallies"] = m.flag_tallies;
    models.push_back(std::move(e));
  }
  j["models"] = std::move(models);
  j["settings"] = {
      {"hist_width", bundle.options.hist_width},
      {"hist_lo", bundle.options.hist_lo},
      {"hist_hi", bundle.options.hist_hi},
      {"permutation_iterations", bundle.options.permutation_iterations},
      {"retention", bundle.options.retention},
      {"p_adjust", bundle.options.p_adjust == PAdjust::none
                       ? "none"
                       : (bundle.options.p_adjust == PAdjust::bonferroni ? "bonferroni"
                                                                         : "holm")},
      {"seed", bundle.options.seed},
  };
  return j;
}

namespace {

std::string correlations_csv(const ReportBundle& bundle) {
  std::ostringstream out;
  out << "model,method,coefficient,p_value,n,p_method,p_permutation,p_adjusted\n";
  for (const auto& m : bundle.models) {
    auto row = [&](const std::optional<CorrelationResult>& c,
                   const std::optional<double>& perm, const std::optional<double>& adj) {
      if (!c) return;
      out << m.model_id << "," << (c->method == CorrMethod::pearson ? "pearson" : "spearman")
          << "," << fmt("%.6f", c->coefficient) << "," << fmt("%.6g", c->p_value) << ","
          << c->n << ",t_approx," << (perm ? fmt("%.6g", *perm) : "") << ","
          << (adj ? fmt("%.6g", *adj) : "") << "\n";
    };
    row(m.pcc, m.pcc_p_permutation, m.pcc_p_adjusted);
    row(m.scc, m.scc_p_permutation, m.scc_p_adjusted);
  }
  return out.str();
}

std::string retention_csv(const ReportBundle& bundle) {
  std::ostringstream out;
  out << "model,n_included,retention_pct,cumulative_scc\n";
  for (const auto& m : bundle.models) {
    for (const auto& p : m.retention) {
      out << m.model_id << "," << p.n_included << "," << fmt("%.6f", p.retention_pct) << ",";
      if (p.cumulative_scc) out << fmt("%.6f", *p.cumulative_scc);
      out << "\n";
    }
  }
  return out.str();
}

std::string histogram_csv(const ReportBundle& bundle) {
  std::ostringstream out;
  out << "source,bin_lo,bin_hi,count\n";
  auto rows = [&](const std::string& source, const HistogramBins& h) {
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      const double lo = h.range_lo + static_cast<double>(k) * h.bin_width;
      const double hi = std::min(lo + h.bin_width, h.range_hi);
      out << source << "," << fmt("%.1f", lo) << "," << fmt("%.1f", hi) << ","
          << h.counts[k] << "\n";
    }
  };
  if (bundle.truth_hist) rows("ground_truth", *bundle.truth_hist);
  for (const auto& m : bundle.models)
    if (m.pred_hist) rows(m.model_id, *m.pred_hist);
  return out.str();
}

std::string keywords_tsv(const ModelEval& m) {
  std::ostringstream out;
  out << "term\tweight\n";
  for (const auto& [term, count] : m.keywords) out << term << "\t" << count << "\n";
  return out.str();
}

std::string stats_row(const std::string& label, const DescriptiveStats& s) {
  std::ostringstream out;
  out << "| " << label << " | " << fmt("%.1f", s.mean) << " | " << fmt("%.1f", s.median)
      << " | " << fmt("%.1f", s.std_dev) << " | " << fmt("%.0f", s.min) << " | "
      << fmt("%.0f", s.max) << " |\n";
  return out.str();
}

}  // namespace

std::string render_report(const ReportBundle& bundle) {
  std::ostringstream out;
  out << "# Well-being evaluation report\n\n";
  out << "Corpus: " << bundle.corpus_n << " records";
  if (bundle.truth_stats) out << ", ground truth available for " << bundle.truth_stats->n;
  out << ".\n\n";

  out << "## Correlations with ground truth\n\n";
  out << "| Model | PCC | SCC | PV(PCC) | PV(SCC) | n |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& m : bundle.models) {
    out << "| " << m.model_id << " | ";
    if (m.pcc) out << fmt("%.3f", m.pcc->coefficient);
    else out << "-";
    out << " | ";
    if (m.scc) out << fmt("%.3f", m.scc->coefficient);
    else out << "-";
    out << " | " << (m.pcc ? fmt("%.4g", m.pcc->p_value) : std::string("-")) << " | "
        << (m.scc ? fmt("%.4g", m.scc->p_value) : std::string("-")) << " | " << m.n_matched
        << " |\n";
  }
  out << "\n";

  for (const auto& m : bundle.models) {
    out << "- " << m.model_id << " — ";
    if (m.pcc) out << "PCC: " << fmt("%.3f", m.pcc->coefficient) << " (p=" << fmt("%.4g", m.pcc->p_value) << "), ";
    if (m.scc) out << "SCC: " << fmt("%.3f", m.scc->coefficient) << " (p=" << fmt("%.4g", m.scc->p_value) << ")";
    if (!m.corr_error.empty()) out << "correlations undefined: " << m.corr_error;
    out << "\n";
  }
  out << "\n## Score statistics\n\n";
  out << "| Source | Mean | Median | STD | Min | Max |\n";
  out << "|---|---|---|---|---|---|\n";
  if (bundle.truth_stats) out << stats_row("ground_truth", *bundle.truth_stats);
  for (const auto& m : bundle.models)
    if (m.pred_stats) out << stats_row(m.model_id, *m.pred_stats);

  out << "\n## Exclusions\n\n";
  for (const auto& m : bundle.models) {
    std::map<std::string, int> by_class;
    for (const auto& e : m.exclusions) ++by_class[e.error_class];
    out << "- " << m.model_id << ": " << m.exclusions.size() << " excluded";
    if (!by_class.empty()) {
      out << " (";
      bool first = true;
      for (const auto& [cls, count] : by_class) {
        if (!first) out << ", ";
        out << cls << ": " << count;
        first = false;
      }
      out << ")";
    }
    out << "; matched " << m.n_matched << " of " << bundle.corpus_n << "\n";
  }

  for (const auto& m : bundle.models) {
    if (m.keywords.empty()) continue;
    out << "\n## Top keywords (" << m.model_id << ")\n\n";
    const std::size_t top = std::min<std::size_t>(m.keywords.size(), 15);
    for (std::size_t i = 0; i < top; ++i)
      out << "- " << m.keywords[i].first << " (" << m.keywords[i].second << ")\n";
  }
  out << "\nSee correlations.csv, retention.csv, histogram.csv and keywords.tsv for\n"
         "plot-ready data; manifest.json lists every excluded record with its class.\n";
  return out.str();
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "metrics.json", bundle_metrics_json(bundle).dump(2) + "\n");
  write_text_file(out_dir / "correlations.csv", correlations_csv(bundle));
  write_text_file(out_dir / "retention.csv", retention_csv(bundle));
  write_text_file(out_dir / "histogram.csv", histogram_csv(bundle));
  if (!bundle.models.empty()) {
    write_text_file(out_dir / "keywords.tsv", keywords_tsv(bundle.models.front()));
    if (bundle.models.size() > 1) {
      for (const auto& m : bundle.models) {
        write_text_file(out_dir / ("keywords_" + sanitize_label(m.model_id) + ".tsv"),
                        keywords_tsv(m));
      }
    }
  }
  write_text_file(out_dir / "report.md", render_report(bundle));

  // merge the evaluation manifest with an existing assess manifest, if any
  json manifest;
  const auto manifest_path = out_dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    try {
      manifest = read_json_file(manifest_path);
    } catch (const std::exception&) {
      manifest = json::object();
    }
  }
  json models = json::array();
  for (const auto& m : bundle.models) {
    json e;
    e["model_id"] = m.model_id;
    e["run_dir"] = m.run_dir;
    e["n_assessed"] = m.n_assessed;
    e["n_matched"] = m.n_matched;
    e["n_excluded"] = m.exclusions.size();
    e["exclusions"] = failures_to_json(m.exclusions);
    e["flag_tallies"] = m.flag_tallies;
    e["accounting_ok"] =
        m.n_matched + static_cast<int>(m.exclusions.size()) == bundle.corpus_n;
    models.push_back(std::move(e));
  }
  manifest["evaluate"] = {
      {"corpus_n", bundle.corpus_n},
      {"seed", bundle.options.seed},
      {"models", std::move(models)},
  };
  write_text_file(manifest_path, manifest.dump(2) + "\n");
}

void seed_completion_cache(const std::filesystem::path& cache_dir,
                           const std::string& model_id, double temperature,
                           const std::vector<TranscriptRecord>& records,
                           const std::vector<std::string>& outputs,
                           const PromptTemplate& tpl) {
  if (records.size() != outputs.size())
    throw std::invalid_argument("records/outputs size mismatch");
  for (std::size_t i = 0; i < records.size(); ++i) {
    RawCompletion c;
    c.record_id = records[i].id;
    c.prompt_hash = prompt_hash_hex(build_prompt(tpl, records[i].text));
    c.content = outputs[i];
    c.model_id = model_id;
    c.attempts = 1;
    c.status = CompletionStatus::ok;
    write_cache_entry(cache_dir, c, temperature);
  }
}

RunConfig parse_run_config(const json& j) {
  RunConfig config;
  if (j.contains("corpus")) config.corpus_path = j["corpus"].get<std::string>();
  if (j.value("format", "jsonl") == "csv") config.corpus_format = CorpusFormat::csv;
  if (j.contains("template")) config.template_path = j["template"].get<std::string>();
  if (j.value("mode", "strict") == "lenient") config.mode = ValidationMode::lenient;
  if (j.contains("output_dir")) config.output_dir = j["output_dir"].get<std::string>();
  config.seed = j.value("seed", std::uint64_t{0});

  if (j.contains("backend")) {
    const json& b = j["backend"];
    config.backend.kind = b.value("kind", "mock") == "http_openai_compatible"
                              ? BackendKind::http_openai_compatible
                              : BackendKind::mock;
    config.backend.base_url = b.value("base_url", "");
    config.backend.model_id = b.value("model_id", config.backend.model_id);
    config.backend.temperature = b.value("temperature", 0.0);
    config.backend.max_output_tokens = b.value("max_output_tokens", 2048);
    config.backend.timeout_sec = b.value("timeout_sec", 30.0);
    config.backend.max_retries = b.value("max_retries", 2);
    config.backend.concurrency_limit = b.value("concurrency_limit", 4);
  }
  config.backend.mock.seed = config.seed;

  if (j.contains("metrics")) {
    const json& m = j["metrics"];
    config.metrics.hist_width = m.value("hist_width", 10.0);
    config.metrics.hist_lo = m.value("hist_lo", 0.0);
    config.metrics.hist_hi = m.value("hist_hi", 130.0);
    config.metrics.permutation_iterations = m.value("permutation_iterations", 0);
    config.metrics.retention = m.value("retention", true);
    const std::string adj = m.value("p_adjust", "none");
    config.metrics.p_adjust = adj == "bonferroni" ? PAdjust::bonferroni
                              : adj == "holm"     ? PAdjust::holm
                                                  : PAdjust::none;
  }
  config.metrics.seed = config.seed;
  return config;
}

}  // namespace pwb
