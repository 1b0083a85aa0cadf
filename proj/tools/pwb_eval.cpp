// Command-line front end: ingest / assess / evaluate / report / wer / synth.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pwb/corpus.hpp"
#include "pwb/pipeline.hpp"
#include "pwb/synth.hpp"
#include "pwb/wer.hpp"

namespace {

using namespace pwb;
using nlohmann::json;

CorpusFormat format_from_string(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "csv") return CorpusFormat::csv;
  throw CLI::ValidationError("--format must be jsonl or csv");
}

void print_stats_line(const char* label, const std::optional<DescriptiveStats>& s) {
  if (!s) {
    std::printf("  %-18s absent\n", label);
    return;
  }
  std::printf("  %-18s mean %8.2f  median %8.2f  std %8.2f  min %8.2f  max %8.2f  (n=%d)\n",
              label, s->mean, s->median, s->std_dev, s->min, s->max, s->n);
}

int cmd_ingest(const std::string& corpus_path, const std::string& format) {
  const auto records = load_corpus(corpus_path, format_from_string(format));
  const auto stats = corpus_stats(records);
  std::printf("loaded %zu records from %s\n", records.size(), corpus_path.c_str());
  print_stats_line("duration_sec", stats.duration_sec);
  print_stats_line("word_count", stats.word_count);
  print_stats_line("unique_words", stats.unique_word_count);
  print_stats_line("words_per_sec", stats.words_per_sec);
  print_stats_line("ground_truth", stats.ground_truth_ryff);
  return 0;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

std::vector<std::pair<std::string, std::string>> load_id_text_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, true);
    if (!j.contains("id") || !j.contains("text"))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": rows need id and text keys");
    out.emplace_back(j["id"].get<std::string>(), j["text"].get<std::string>());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot well-being assessment pipeline and evaluation harness"};
  app.require_subcommand(1);

  // ---- ingest ----
  std::string in_corpus, in_format = "jsonl";
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print its statistics");
  ingest->add_option("--corpus", in_corpus, "corpus file")->required();
  ingest->add_option("--format", in_format, "jsonl or csv");

  // ---- assess ----
  RunConfig run;
  std::string as_corpus, as_format = "jsonl", as_backend = "mock", as_mode = "strict";
  std::string as_template, as_config, as_out;
  auto* assess = app.add_subcommand("assess", "Run prompts through a backend and validate");
  assess->add_option("--corpus", as_corpus, "corpus file");
  assess->add_option("--format", as_format, "jsonl or csv");
  assess->add_option("--out", as_out, "output directory");
  assess->add_option("--backend", as_backend, "mock or http");
  assess->add_option("--base-url", run.backend.base_url, "OpenAI-compatible base URL");
  assess->add_option("--model", run.backend.model_id, "model id");
  assess->add_option("--temperature", run.backend.temperature, "sampling temperature");
  assess->add_option("--max-tokens", run.backend.max_output_tokens, "max output tokens");
  assess->add_option("--timeout", run.backend.timeout_sec, "request timeout (s)");
  assess->add_option("--max-retries", run.backend.max_retries, "retry budget");
  assess->add_option("--concurrency", run.backend.concurrency_limit, "in-flight limit");
  assess->add_option("--template", as_template, "prompt template file");
  assess->add_option("--mode", as_mode, "strict or lenient validation");
  assess->add_option("--seed", run.seed, "run seed");
  assess->add_option("--config", as_config, "JSON config file (flags override it)");

  // ---- evaluate ----
  std::string ev_corpus, ev_format = "jsonl", ev_out, ev_adjust = "none";
  std::vector<std::string> ev_runs;
  EvalOptions ev_options;
  auto* evaluate = app.add_subcommand("evaluate", "Compute correlations, stats and curves");
  evaluate->add_option("--corpus", ev_corpus, "corpus file")->required();
  evaluate->add_option("--format", ev_format, "jsonl or csv");
  evaluate->add_option("--run", ev_runs, "assess output directory (repeatable)")->required();
  evaluate->add_option("--out", ev_out, "report directory (default: first run dir)");
  evaluate->add_option("--hist-width", ev_options.hist_width, "histogram bin width");
  evaluate->add_option("--hist-lo", ev_options.hist_lo, "histogram range low");
  evaluate->add_option("--hist-hi", ev_options.hist_hi, "histogram range high");
  evaluate->add_option("--permutation-iters", ev_options.permutation_iterations,
                       "permutation test iterations (0 = off)");
  evaluate->add_flag("--no-retention", "skip retention curves");
  evaluate->add_option("--p-adjust", ev_adjust, "none, bonferroni or holm");
  evaluate->add_option("--seed", ev_options.seed, "seed for permutation tests");

  // ---- report ----
  std::string rp_dir;
  auto* report = app.add_subcommand("report", "Print report.md from an evaluation directory");
  report->add_option("--dir", rp_dir, "evaluation output directory")->required();

  // ---- wer ----
  std::string wer_ref, wer_hyp, wer_out;
  bool wer_per_record = false;
  bool wer_raw_tokens = false;
  auto* wer_cmd = app.add_subcommand("wer", "Word error rate between transcript files");
  wer_cmd->add_option("--ref", wer_ref, "reference JSONL (id, text)")->required();
  wer_cmd->add_option("--hyp", wer_hyp, "hypothesis JSONL (id, text)")->required();
  wer_cmd->add_option("--out", wer_out, "CSV output file (default stdout)");
  wer_cmd->add_flag("--per-record", wer_per_record, "emit one row per record id");
  wer_cmd->add_flag("--raw-tokens", wer_raw_tokens,
                    "whitespace-split only; skip lowercasing and punctuation stripping");

  // ---- synth ----
  SynthConfig synth_cfg;
  std::string sy_out, sy_cache, sy_model = "mock-model";
  std::vector<std::string> sy_malform;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus + mock cache");
  synth->add_option("--n", synth_cfg.n_records, "number of records");
  synth->add_option("--sigma", synth_cfg.noise_sigma, "prediction noise sigma");
  synth->add_option("--seed", synth_cfg.seed, "generator seed");
  synth->add_option("--lo", synth_cfg.truth_lo, "ground-truth lower bound");
  synth->add_option("--hi", synth_cfg.truth_hi, "ground-truth upper bound");
  synth->add_option("--alien-fraction", synth_cfg.alien_keyword_fraction,
                    "fraction of keywords not present in the transcript");
  synth->add_option("--malform", sy_malform, "class=prob (e.g. fenced=0.1), repeatable");
  synth->add_option("--out", sy_out, "corpus JSONL path")->required();
  synth->add_option("--cache-dir", sy_cache, "write canned completions here");
  synth->add_option("--model", sy_model, "model id for the cache entries");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(in_corpus, in_format);

    if (*assess) {
      if (!as_config.empty()) run = parse_run_config(load_json_file(as_config));
      if (!as_corpus.empty()) run.corpus_path = as_corpus;
      if (assess->count("--format")) run.corpus_format = format_from_string(as_format);
      if (!as_out.empty()) run.output_dir = as_out;
      if (assess->count("--backend"))
        run.backend.kind = as_backend == "http" ? BackendKind::http_openai_compatible
                                                : BackendKind::mock;
      if (!as_template.empty()) run.template_path = as_template;
      if (assess->count("--mode"))
        run.mode = as_mode == "lenient" ? ValidationMode::lenient : ValidationMode::strict;
      if (run.corpus_path.empty() || run.output_dir.empty())
        throw std::runtime_error("assess requires --corpus and --out (or --config)");
      run.backend.mock.seed = run.seed;

      const AssessSummary summary = run_assess(run);
      std::printf("assessed %d records: %d ok, %d failed, %ld backend calls\n",
                  summary.n_records, summary.n_ok, summary.n_failed, summary.backend_calls);
      for (const auto& f : summary.failures)
        std::printf("  failed %s: %s\n", f.record_id.c_str(), f.error_class.c_str());
      return summary.n_ok > 0 || summary.n_records == 0 ? 0 : 1;
    }

    if (*evaluate) {
      ev_options.retention = evaluate->count("--no-retention") == 0;
      ev_options.p_adjust = ev_adjust == "bonferroni" ? PAdjust::bonferroni
                            : ev_adjust == "holm"     ? PAdjust::holm
                                                      : PAdjust::none;
      const auto corpus = load_corpus(ev_corpus, format_from_string(ev_format));
      std::vector<std::filesystem::path> run_dirs(ev_runs.begin(), ev_runs.end());
      const ReportBundle bundle = run_evaluate(corpus, run_dirs, ev_options);
      const std::filesystem::path out_dir = ev_out.empty() ? run_dirs.front()
                                                           : std::filesystem::path(ev_out);
      write_bundle(bundle, out_dir);
      std::printf("wrote evaluation bundle to %s\n", out_dir.string().c_str());
      for (const auto& m : bundle.models) {
        if (m.scc)
          std::printf("  %s: PCC %.3f (p=%.4g), SCC %.3f (p=%.4g), n=%d\n", m.model_id.c_str(),
                      m.pcc->coefficient, m.pcc->p_value, m.scc->coefficient, m.scc->p_value,
                      m.n_matched);
        else
          std::printf("  %s: correlations undefined (%s)\n", m.model_id.c_str(),
                      m.corr_error.c_str());
      }
      return 0;
    }

    if (*report) {
      std::ifstream in(std::filesystem::path(rp_dir) / "report.md");
      if (!in) throw std::runtime_error("no report.md in " + rp_dir + " (run evaluate first)");
      std::cout << in.rdbuf();
      return 0;
    }

    if (*wer_cmd) {
      const auto refs = load_id_text_jsonl(wer_ref);
      const auto hyps = load_id_text_jsonl(wer_hyp);
      std::map<std::string, std::string> hyp_by_id(hyps.begin(), hyps.end());

      auto split_raw = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream in(s);
        std::string tok;
        while (in >> tok) out.push_back(tok);
        return out;
      };
      auto to_tokens = [&](const std::string& s) {
        return wer_raw_tokens ? split_raw(s) : normalize_for_wer(s);
      };

      std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
      std::ostringstream csv;
      csv << "id,wer_pct,sub_pct,del_pct,ins_pct,n_ref\n";
      for (const auto& [id, ref_text] : refs) {
        const auto it = hyp_by_id.find(id);
        if (it == hyp_by_id.end())
          throw std::runtime_error("hypothesis file has no record for id \"" + id + "\"");
        pairs.emplace_back(to_tokens(ref_text), to_tokens(it->second));
        if (wer_per_record) {
          const WerReport r = wer(align(pairs.back().first, pairs.back().second));
          char buf[160];
          std::snprintf(buf, sizeof(buf), "%s,%.1f,%.1f,%.1f,%.1f,%ld\n", id.c_str(),
                        r.wer_pct, r.sub_pct, r.del_pct, r.ins_pct, r.counts.n_ref);
          csv << buf;
        }
      }
      const WerReport total = corpus_wer(pairs);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "ALL,%.1f,%.1f,%.1f,%.1f,%ld\n", total.wer_pct,
                    total.sub_pct, total.del_pct, total.ins_pct, total.counts.n_ref);
      csv << buf;
      if (wer_out.empty()) {
        std::cout << csv.str();
      } else {
        std::ofstream out(wer_out, std::ios::binary);
        out << csv.str();
      }
      return 0;
    }

    if (*synth) {
      for (const auto& spec : sy_malform) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("--malform expects class=prob, got: " + spec);
        const auto cls = parse_malform_class(spec.substr(0, eq));
        if (!cls) throw std::runtime_error("unknown malformation class: " + spec.substr(0, eq));
        synth_cfg.malformation_mix[*cls] = std::stod(spec.substr(eq + 1));
      }
      const SynthCorpus corpus = generate_corpus(synth_cfg, default_vocab());
      write_corpus_jsonl(sy_out, corpus.records);
      std::printf("wrote %zu synthetic records to %s\n", corpus.records.size(), sy_out.c_str());
      if (!sy_cache.empty()) {
        seed_completion_cache(sy_cache, sy_model, 0.0, corpus.records, corpus.mock_outputs,
                              default_template());
        std::printf("seeded completion cache at %s (model %s)\n", sy_cache.c_str(),
                    sy_model.c_str());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
