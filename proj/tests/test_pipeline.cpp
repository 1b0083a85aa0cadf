#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pwb/pipeline.hpp"
#include "pwb/synth.hpp"

using namespace pwb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// synth corpus + pre-seeded cache + assess in one step
struct PreparedRun {
  fs::path dir;
  fs::path corpus_path;
  std::vector<TranscriptRecord> records;
  AssessSummary summary;
};

PreparedRun prepare_run(const std::string& name, SynthConfig cfg, int concurrency = 4) {
  PreparedRun out;
  out.dir = fresh_dir(name);
  const auto corpus = generate_corpus(cfg, default_vocab());
  out.records = corpus.records;
  out.corpus_path = out.dir / "corpus.jsonl";
  write_corpus_jsonl(out.corpus_path, corpus.records);
  seed_completion_cache(out.dir / "raw_cache", "mock-model", 0.0, corpus.records,
                        corpus.mock_outputs, default_template());

  RunConfig run;
  run.corpus_path = out.corpus_path;
  run.output_dir = out.dir;
  run.backend.kind = BackendKind::mock;
  run.backend.concurrency_limit = concurrency;
  run.seed = cfg.seed;
  out.summary = run_assess(run);
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PWB_EVAL_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("noiseless pipeline reaches perfect correlations") {
  SynthConfig cfg;
  cfg.n_records = 10;
  cfg.noise_sigma = 0.0;
  cfg.seed = 91;
  const auto run = prepare_run("pwb_pipe_noiseless", cfg);
  CHECK(run.summary.n_ok == 10);
  CHECK(run.summary.n_failed == 0);
  CHECK(run.summary.backend_calls == 0);  // cache pre-seeded by synth

  const auto corpus = load_corpus(run.corpus_path, CorpusFormat::jsonl);
  const auto bundle = run_evaluate(corpus, {run.dir}, EvalOptions{});
  REQUIRE(bundle.models.size() == 1);
  const auto& m = bundle.models[0];
  REQUIRE(m.pcc.has_value());
  REQUIRE(m.scc.has_value());
  CHECK(m.pcc->coefficient == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.scc->coefficient == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.pcc->p_value < 0.01);
  CHECK(m.scc->p_value < 0.01);
  CHECK(m.n_matched == 10);
  CHECK(m.exclusions.empty());
}

TEST_CASE("rerun over the same cache makes zero backend calls and identical output") {
  SynthConfig cfg;
  cfg.n_records = 8;
  cfg.seed = 92;
  const auto run = prepare_run("pwb_pipe_rerun", cfg);
  const std::string first = slurp(run.dir / "assessments.jsonl");

  RunConfig rerun;
  rerun.corpus_path = run.corpus_path;
  rerun.output_dir = run.dir;
  rerun.backend.kind = BackendKind::mock;
  rerun.seed = cfg.seed;
  const auto summary = run_assess(rerun);
  CHECK(summary.backend_calls == 0);
  CHECK(summary.n_ok == 8);
  CHECK(slurp(run.dir / "assessments.jsonl") == first);
}

TEST_CASE("an uncached record falls back to the live mock deterministically") {
  SynthConfig cfg;
  cfg.n_records = 5;
  cfg.seed = 93;
  auto run = prepare_run("pwb_pipe_uncached", cfg);
  // drop one cache entry; the next assess must call the backend exactly once
  const auto tpl = default_template();
  const auto hash = prompt_hash_hex(build_prompt(tpl, run.records[2].text));
  fs::remove(cache_file_path(run.dir / "raw_cache", "mock-model", hash));

  RunConfig rerun;
  rerun.corpus_path = run.corpus_path;
  rerun.output_dir = run.dir;
  rerun.backend.kind = BackendKind::mock;
  rerun.seed = cfg.seed;
  const auto summary = run_assess(rerun);
  CHECK(summary.backend_calls == 1);
  CHECK(summary.n_ok == 5);
}

TEST_CASE("no_json corruption yields n-1 assessments and a manifest failure entry") {
  SynthConfig cfg;
  cfg.n_records = 10;
  cfg.seed = 94;
  const auto dir = fresh_dir("pwb_pipe_nojson");
  auto corpus = generate_corpus(cfg, default_vocab());
  corpus.mock_outputs[3] = corrupt_output(corpus.mock_outputs[3], MalformClass::no_json, 1);
  const auto corpus_path = dir / "corpus.jsonl";
  write_corpus_jsonl(corpus_path, corpus.records);
  seed_completion_cache(dir / "raw_cache", "mock-model", 0.0, corpus.records,
                        corpus.mock_outputs, default_template());

  RunConfig run;
  run.corpus_path = corpus_path;
  run.output_dir = dir;
  run.backend.kind = BackendKind::mock;
  const auto summary = run_assess(run);
  CHECK(summary.n_ok == 9);
  CHECK(summary.n_failed == 1);
  REQUIRE(summary.failures.size() == 1);
  CHECK(summary.failures[0].record_id == corpus.records[3].id);
  CHECK(summary.failures[0].error_class == "extract_error");

  const json manifest = json::parse(slurp(dir / "manifest.json"));
  REQUIRE(manifest["assess"]["failures"].size() == 1);
  CHECK(manifest["assess"]["failures"][0]["record_id"] == corpus.records[3].id);

  // evaluation carries the failure through as an exclusion; accounting balances
  const auto loaded = load_corpus(corpus_path, CorpusFormat::jsonl);
  const auto bundle = run_evaluate(loaded, {dir}, EvalOptions{});
  const auto& m = bundle.models[0];
  CHECK(m.n_matched == 9);
  REQUIRE(m.exclusions.size() == 1);
  CHECK(m.exclusions[0].record_id == corpus.records[3].id);
  CHECK(m.exclusions[0].error_class == "extract_error");
  CHECK(m.n_matched + static_cast<int>(m.exclusions.size()) == bundle.corpus_n);
}

TEST_CASE("records without ground truth are excluded with their own class") {
  SynthConfig cfg;
  cfg.n_records = 6;
  cfg.seed = 95;
  auto run = prepare_run("pwb_pipe_nogt", cfg);
  auto records = load_corpus(run.corpus_path, CorpusFormat::jsonl);
  records[1].ground_truth_ryff.reset();
  write_corpus_jsonl(run.corpus_path, records);

  const auto bundle = run_evaluate(records, {run.dir}, EvalOptions{});
  const auto& m = bundle.models[0];
  CHECK(m.n_matched == 5);
  REQUIRE(m.exclusions.size() == 1);
  CHECK(m.exclusions[0].error_class == "missing_ground_truth");
}

TEST_CASE("constant predictions surface zero_variance and the run continues") {
  const auto dir = fresh_dir("pwb_pipe_constant");
  // hand-built run dir: four identical-total assessments
  std::vector<TranscriptRecord> records;
  std::ostringstream lines;
  for (int i = 0; i < 4; ++i) {
    TranscriptRecord rec;
    rec.id = "c" + std::to_string(i);
    rec.text = "the same words again and again";
    rec.ground_truth_ryff = 60 + 10 * i;
    records.push_back(rec);

    AssessmentResult result;
    result.record_id = rec.id;
    for (Dimension d : all_dimensions()) {
      auto& dim = result.dimensions[static_cast<std::size_t>(dimension_index(d))];
      dim.dimension = d;
      dim.score = 10;
    }
    result.total = 60;
    lines << grounded_to_json(ground_keywords(result, rec.text)).dump() << "\n";
  }
  std::ofstream(dir / "assessments.jsonl", std::ios::binary) << lines.str();

  const auto bundle = run_evaluate(records, {dir}, EvalOptions{});
  const auto& m = bundle.models[0];
  CHECK(m.corr_error == "zero_variance");
  CHECK_FALSE(m.pcc.has_value());
  CHECK_FALSE(m.scc.has_value());
  REQUIRE(m.pred_stats.has_value());  // other outputs still produced
  CHECK(m.pred_stats->mean == 60.0);
  CHECK(m.pred_stats->std_dev == 0.0);
  REQUIRE(!m.retention.empty());
  for (const auto& point : m.retention) CHECK_FALSE(point.cumulative_scc.has_value());
}

TEST_CASE("report metrics equal direct metrics-module calls on the same JSONL") {
  SynthConfig cfg;
  cfg.n_records = 30;
  cfg.noise_sigma = 9.0;
  cfg.seed = 96;
  const auto run = prepare_run("pwb_pipe_oracle", cfg);
  const auto corpus = load_corpus(run.corpus_path, CorpusFormat::jsonl);
  const auto bundle = run_evaluate(corpus, {run.dir}, EvalOptions{});

  // independent recomputation straight from the files
  std::vector<double> pred, truth;
  std::ifstream in(run.dir / "assessments.jsonl");
  std::string line;
  std::map<std::string, double> totals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    totals[j["record_id"].get<std::string>()] = j["total"].get<double>();
  }
  for (const auto& rec : corpus) {
    if (!rec.ground_truth_ryff || !totals.count(rec.id)) continue;
    pred.push_back(totals[rec.id]);
    truth.push_back(static_cast<double>(*rec.ground_truth_ryff));
  }
  const auto pcc = pearson(pred, truth);
  const auto scc = spearman(pred, truth);
  const auto& m = bundle.models[0];
  CHECK(m.pcc->coefficient == pcc.coefficient);
  CHECK(m.scc->coefficient == scc.coefficient);
  CHECK(m.pcc->p_value == pcc.p_value);
  CHECK(m.scc->p_value == scc.p_value);
}

TEST_CASE("render_report is deterministic and carries the headline numbers") {
  SynthConfig cfg;
  cfg.n_records = 10;
  cfg.noise_sigma = 0.0;
  cfg.seed = 97;
  const auto run = prepare_run("pwb_pipe_report", cfg);
  const auto corpus = load_corpus(run.corpus_path, CorpusFormat::jsonl);
  const auto bundle = run_evaluate(corpus, {run.dir}, EvalOptions{});
  const std::string a = render_report(bundle);
  const std::string b = render_report(bundle);
  CHECK(a == b);
  CHECK(a.find("SCC: 1.000") != std::string::npos);
  CHECK(a.find("matched 10 of 10") != std::string::npos);
}

TEST_CASE("report shows exclusion counts and classes") {
  SynthConfig cfg;
  cfg.n_records = 8;
  cfg.seed = 98;
  const auto dir = fresh_dir("pwb_pipe_excl_report");
  auto corpus = generate_corpus(cfg, default_vocab());
  corpus.mock_outputs[0] = corrupt_output(corpus.mock_outputs[0], MalformClass::no_json, 2);
  write_corpus_jsonl(dir / "corpus.jsonl", corpus.records);
  seed_completion_cache(dir / "raw_cache", "mock-model", 0.0, corpus.records,
                        corpus.mock_outputs, default_template());
  RunConfig run;
  run.corpus_path = dir / "corpus.jsonl";
  run.output_dir = dir;
  run_assess(run);
  const auto loaded = load_corpus(dir / "corpus.jsonl", CorpusFormat::jsonl);
  const auto bundle = run_evaluate(loaded, {dir}, EvalOptions{});
  const std::string report = render_report(bundle);
  CHECK(report.find("1 excluded") != std::string::npos);
  CHECK(report.find("extract_error") != std::string::npos);
}

TEST_CASE("write_bundle produces the documented files; keywords are grounded only") {
  SynthConfig cfg;
  cfg.n_records = 12;
  cfg.seed = 99;
  cfg.alien_keyword_fraction = 0.5;
  const auto run = prepare_run("pwb_pipe_bundle", cfg);
  const auto corpus = load_corpus(run.corpus_path, CorpusFormat::jsonl);
  const auto bundle = run_evaluate(corpus, {run.dir}, EvalOptions{});
  write_bundle(bundle, run.dir);

  for (const char* name : {"metrics.json", "correlations.csv", "retention.csv",
                           "histogram.csv", "keywords.tsv", "manifest.json", "report.md"}) {
    CHECK(fs::exists(run.dir / name));
  }
  // alien keywords never appear in the keyword table
  const std::string keywords = slurp(run.dir / "keywords.tsv");
  CHECK(keywords.find("qqxalien") == std::string::npos);
  CHECK(keywords.rfind("term\tweight", 0) == 0);

  const json manifest = json::parse(slurp(run.dir / "manifest.json"));
  CHECK(manifest.contains("assess"));    // merged, not clobbered
  CHECK(manifest.contains("evaluate"));
  CHECK(manifest["evaluate"]["models"][0]["accounting_ok"] == true);
}

TEST_CASE("evaluate requires at least three matched pairs") {
  SynthConfig cfg;
  cfg.n_records = 3;
  cfg.seed = 90;
  auto run = prepare_run("pwb_pipe_toofew", cfg);
  auto records = load_corpus(run.corpus_path, CorpusFormat::jsonl);
  records[0].ground_truth_ryff.reset();
  CHECK_THROWS_WITH_AS(run_evaluate(records, {run.dir}, EvalOptions{}),
                       doctest::Contains("fewer than 3"), std::runtime_error);
}

TEST_CASE("lenient mode records repaired_json flags end to end") {
  SynthConfig cfg;
  cfg.n_records = 6;
  cfg.seed = 89;
  cfg.malformation_mix[MalformClass::trailing_comma] = 1.0;
  const auto dir = fresh_dir("pwb_pipe_lenient");
  const auto corpus = generate_corpus(cfg, default_vocab());
  write_corpus_jsonl(dir / "corpus.jsonl", corpus.records);
  seed_completion_cache(dir / "raw_cache", "mock-model", 0.0, corpus.records,
                        corpus.mock_outputs, default_template());

  RunConfig run;
  run.corpus_path = dir / "corpus.jsonl";
  run.output_dir = dir;
  run.mode = ValidationMode::lenient;
  const auto summary = run_assess(run);
  CHECK(summary.n_ok == 6);
  CHECK(summary.flag_tallies.at("repaired_json") == 6);

  // strict mode also recovers (repairs are an extraction feature) but keeps
  // result flags empty
  const auto dir2 = fresh_dir("pwb_pipe_strict_repair");
  write_corpus_jsonl(dir2 / "corpus.jsonl", corpus.records);
  seed_completion_cache(dir2 / "raw_cache", "mock-model", 0.0, corpus.records,
                        corpus.mock_outputs, default_template());
  RunConfig strict_run;
  strict_run.corpus_path = dir2 / "corpus.jsonl";
  strict_run.output_dir = dir2;
  const auto strict_summary = run_assess(strict_run);
  CHECK(strict_summary.n_ok == 6);
  CHECK(strict_summary.flag_tallies.at("repaired_json") == 6);
  std::ifstream in(dir2 / "assessments.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CHECK(json::parse(line)["validation_flags"].empty());
  }
}

TEST_CASE("evaluate can add permutation p-values and adjusted p-values") {
  SynthConfig cfg;
  cfg.n_records = 25;
  cfg.noise_sigma = 10.0;
  cfg.seed = 88;
  const auto run = prepare_run("pwb_pipe_perm", cfg);
  const auto corpus = load_corpus(run.corpus_path, CorpusFormat::jsonl);
  EvalOptions options;
  options.permutation_iterations = 2000;
  options.p_adjust = PAdjust::holm;
  options.seed = 11;
  const auto bundle = run_evaluate(corpus, {run.dir}, options);
  const auto& m = bundle.models[0];
  REQUIRE(m.pcc_p_permutation.has_value());
  REQUIRE(m.scc_p_permutation.has_value());
  CHECK(std::fabs(*m.pcc_p_permutation - m.pcc->p_value) < 0.05);
  REQUIRE(m.pcc_p_adjusted.has_value());
  CHECK(*m.pcc_p_adjusted >= m.pcc->p_value);  // adjustment never shrinks p

  // seeded: a second evaluation reproduces the same permutation p exactly
  const auto again = run_evaluate(corpus, {run.dir}, options);
  CHECK(*again.models[0].pcc_p_permutation == *m.pcc_p_permutation);
}

TEST_CASE("evaluate combines multiple run directories into one report") {
  SynthConfig cfg;
  cfg.n_records = 14;
  cfg.seed = 87;
  const auto base = fresh_dir("pwb_pipe_multi");
  const auto corpus = generate_corpus(cfg, default_vocab());
  const auto corpus_path = base / "corpus.jsonl";
  write_corpus_jsonl(corpus_path, corpus.records);

  std::vector<fs::path> run_dirs;
  for (const std::string model : {"model-alpha", "model-beta"}) {
    const fs::path dir = base / model;
    fs::create_directories(dir);
    seed_completion_cache(dir / "raw_cache", model, 0.0, corpus.records, corpus.mock_outputs,
                          default_template());
    RunConfig run;
    run.corpus_path = corpus_path;
    run.output_dir = dir;
    run.backend.model_id = model;
    run_assess(run);
    run_dirs.push_back(dir);
  }

  const auto loaded = load_corpus(corpus_path, CorpusFormat::jsonl);
  const auto bundle = run_evaluate(loaded, run_dirs, EvalOptions{});
  REQUIRE(bundle.models.size() == 2);
  CHECK(bundle.models[0].model_id == "model-alpha");
  CHECK(bundle.models[1].model_id == "model-beta");

  const fs::path out = base / "combined";
  write_bundle(bundle, out);
  CHECK(fs::exists(out / "keywords_model-alpha.tsv"));
  CHECK(fs::exists(out / "keywords_model-beta.tsv"));
  const json metrics = json::parse(slurp(out / "metrics.json"));
  CHECK(metrics["models"].size() == 2);
  const std::string report = render_report(bundle);
  CHECK(report.find("model-alpha") != std::string::npos);
  CHECK(report.find("model-beta") != std::string::npos);
}

TEST_CASE("parse_run_config reads the documented JSON shape") {
  const json j = json::parse(R"({
    "corpus": "c.jsonl", "format": "csv", "mode": "lenient",
    "output_dir": "out", "seed": 9,
    "backend": {"kind": "http_openai_compatible", "base_url": "http://x:1",
                 "model_id": "m1", "temperature": 0.5, "concurrency_limit": 7},
    "metrics": {"hist_width": 5, "permutation_iterations": 2000, "p_adjust": "holm"}
  })");
  const RunConfig config = parse_run_config(j);
  CHECK(config.corpus_path == "c.jsonl");
  CHECK(config.corpus_format == CorpusFormat::csv);
  CHECK(config.mode == ValidationMode::lenient);
  CHECK(config.seed == 9);
  CHECK(config.backend.kind == BackendKind::http_openai_compatible);
  CHECK(config.backend.model_id == "m1");
  CHECK(config.backend.concurrency_limit == 7);
  CHECK(config.metrics.hist_width == 5.0);
  CHECK(config.metrics.permutation_iterations == 2000);
  CHECK(config.metrics.p_adjust == PAdjust::holm);
  CHECK(config.metrics.seed == 9);
}

TEST_CASE("cli: synth -> ingest -> assess -> evaluate -> report") {
  const auto dir = fresh_dir("pwb_cli_e2e");
  const std::string corpus = (dir / "corpus.jsonl").string();
  const std::string run = (dir / "run").string();
  CHECK(run_cli("synth --n 12 --sigma 0 --seed 4 --out " + corpus + " --cache-dir " + run +
                "/raw_cache") == 0);
  CHECK(run_cli("ingest --corpus " + corpus) == 0);
  CHECK(run_cli("assess --corpus " + corpus + " --out " + run + " --backend mock --seed 4") ==
        0);
  CHECK(run_cli("evaluate --corpus " + corpus + " --run " + run) == 0);
  CHECK(run_cli("report --dir " + run) == 0);
  CHECK(fs::exists(fs::path(run) / "metrics.json"));
  const json metrics = json::parse(slurp(fs::path(run) / "metrics.json"));
  CHECK(metrics["models"][0]["scc"]["coefficient"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cli: assess accepts a JSON config file with flag overrides") {
  const auto dir = fresh_dir("pwb_cli_config");
  const std::string corpus = (dir / "corpus.jsonl").string();
  const std::string run = (dir / "run").string();
  CHECK(run_cli("synth --n 8 --sigma 0 --seed 6 --out " + corpus + " --cache-dir " + run +
                "/raw_cache") == 0);
  {
    json cfg;
    cfg["corpus"] = corpus;
    cfg["output_dir"] = run;
    cfg["seed"] = 6;
    cfg["backend"] = {{"kind", "mock"}, {"model_id", "mock-model"}};
    std::ofstream out(dir / "config.json");
    out << cfg.dump();
  }
  CHECK(run_cli("assess --config " + (dir / "config.json").string()) == 0);
  CHECK(fs::exists(fs::path(run) / "assessments.jsonl"));
  const json manifest = json::parse(slurp(fs::path(run) / "manifest.json"));
  CHECK(manifest["assess"]["backend_calls"] == 0);  // cache hit via config path
}

TEST_CASE("cli: wer subcommand matches records by id") {
  const auto dir = fresh_dir("pwb_cli_wer");
  std::ofstream(dir / "ref.jsonl")
      << R"({"id":"a","text":"the cat sat down"})" << "\n"
      << R"({"id":"b","text":"hello there friend"})" << "\n";
  std::ofstream(dir / "hyp.jsonl")
      << R"({"id":"b","text":"hello there friend"})" << "\n"
      << R"({"id":"a","text":"the cat sit"})" << "\n";
  const std::string out = (dir / "wer.csv").string();
  CHECK(run_cli("wer --ref " + (dir / "ref.jsonl").string() + " --hyp " +
                (dir / "hyp.jsonl").string() + " --out " + out) == 0);
  const std::string csv = slurp(out);
  // 7 ref words, 1 sub + 1 del -> 28.6%
  CHECK(csv.find("ALL,28.6,14.3,14.3,0.0,7") != std::string::npos);

  // unmatched id is an error
  std::ofstream(dir / "hyp2.jsonl") << R"({"id":"zz","text":"x"})" << "\n";
  CHECK(run_cli("wer --ref " + (dir / "ref.jsonl").string() + " --hyp " +
                (dir / "hyp2.jsonl").string()) != 0);

  // raw token mode: case differences become errors
  std::ofstream(dir / "ref3.jsonl") << R"({"id":"a","text":"The cat"})" << "\n";
  std::ofstream(dir / "hyp3.jsonl") << R"({"id":"a","text":"the cat"})" << "\n";
  const std::string out3 = (dir / "wer3.csv").string();
  CHECK(run_cli("wer --ref " + (dir / "ref3.jsonl").string() + " --hyp " +
                (dir / "hyp3.jsonl").string() + " --raw-tokens --out " + out3) == 0);
  CHECK(slurp(out3).find("ALL,50.0") != std::string::npos);
}

TEST_CASE("cli: ingest rejects an invalid corpus") {
  const auto dir = fresh_dir("pwb_cli_bad");
  std::ofstream(dir / "bad.jsonl") << R"({"id":"a","text":"x","ground_truth_ryff":300})" << "\n";
  CHECK(run_cli("ingest --corpus " + (dir / "bad.jsonl").string()) != 0);
}
