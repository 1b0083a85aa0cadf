#include "pwb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "pwb/text.hpp"

namespace pwb {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  throw CorpusError(path.string() + ":" + std::to_string(line) + ": " + what);
}

void validate_record(const TranscriptRecord& rec, const std::filesystem::path& path,
                     std::size_t line) {
  if (rec.id.empty()) fail(path, line, "record has empty id");
  if (rec.ground_truth_ryff &&
      (*rec.ground_truth_ryff < kRyffTotalMin || *rec.ground_truth_ryff > kRyffTotalMax)) {
    fail(path, line,
         "record \"" + rec.id + "\": ground_truth_ryff " +
             std::to_string(*rec.ground_truth_ryff) + " outside [" +
             std::to_string(kRyffTotalMin) + ", " + std::to_string(kRyffTotalMax) + "]");
  }
  if (rec.duration_sec && *rec.duration_sec < 0.0) {
    fail(path, line, "record \"" + rec.id + "\": negative duration_sec");
  }
}

TranscriptRecord record_from_json(const json& j, const std::filesystem::path& path,
                                  std::size_t line) {
  if (!j.is_object()) fail(path, line, "row is not a JSON object");
  TranscriptRecord rec;
  if (!j.contains("id") || !j["id"].is_string()) fail(path, line, "missing string key \"id\"");
  if (!j.contains("text") || !j["text"].is_string())
    fail(path, line, "missing string key \"text\"");
  rec.id = j["id"].get<std::string>();
  rec.text = j["text"].get<std::string>();
  if (j.contains("ground_truth_ryff") && !j["ground_truth_ryff"].is_null()) {
    if (!j["ground_truth_ryff"].is_number_integer())
      fail(path, line, "ground_truth_ryff must be an integer");
    rec.ground_truth_ryff = j["ground_truth_ryff"].get<int>();
  }
  if (j.contains("duration_sec") && !j["duration_sec"].is_null()) {
    if (!j["duration_sec"].is_number()) fail(path, line, "duration_sec must be a number");
    rec.duration_sec = j["duration_sec"].get<double>();
  }
  if (j.contains("age") && !j["age"].is_null()) {
    if (!j["age"].is_number_integer()) fail(path, line, "age must be an integer");
    rec.age = j["age"].get<int>();
  }
  if (j.contains("sex") && !j["sex"].is_null()) {
    if (!j["sex"].is_string()) fail(path, line, "sex must be a string");
    rec.sex = parse_sex(j["sex"].get<std::string>());
  }
  validate_record(rec, path, line);
  return rec;
}

std::vector<TranscriptRecord> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  std::vector<TranscriptRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(path, lineno, std::string("malformed JSON: ") + e.what());
    }
    records.push_back(record_from_json(j, path, lineno));
  }
  return records;
}

// Minimal CSV reader: quoted fields, doubled quotes, newlines inside quotes.
struct CsvRow {
  std::vector<std::string> fields;
  std::size_t start_line = 0;
};

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<CsvRow> rows;
  CsvRow row;
  row.start_line = 1;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  std::size_t line = 1;

  auto end_field = [&]() {
    row.fields.push_back(field);
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    if (row_has_content || row.fields.size() > 1) rows.push_back(row);
    row = CsvRow{};
    row.start_line = line;
    row_has_content = false;
  };

  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (c == '\n') ++line;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        row_has_content = true;
        break;
    }
  }
  if (in_quotes) fail(path, row.start_line, "unterminated quoted field");
  if (row_has_content || !field.empty()) end_row();
  return rows;
}

std::vector<TranscriptRecord> load_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw CorpusError("empty CSV corpus: " + path.string());

  const auto& header = rows.front().fields;
  auto col = [&](std::string_view name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int c_id = col("id");
  const int c_text = col("text");
  if (c_id < 0 || c_text < 0)
    fail(path, rows.front().start_line, "CSV header must contain id and text columns");
  const int c_gt = col("ground_truth_ryff");
  const int c_dur = col("duration_sec");
  const int c_age = col("age");
  const int c_sex = col("sex");

  auto cell = [](const CsvRow& row, int idx) -> std::string {
    if (idx < 0 || static_cast<std::size_t>(idx) >= row.fields.size()) return {};
    return row.fields[static_cast<std::size_t>(idx)];
  };

  std::vector<TranscriptRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    TranscriptRecord rec;
    rec.id = cell(row, c_id);
    rec.text = cell(row, c_text);
    try {
      if (std::string v = cell(row, c_gt); !v.empty()) rec.ground_truth_ryff = std::stoi(v);
      if (std::string v = cell(row, c_dur); !v.empty()) rec.duration_sec = std::stod(v);
      if (std::string v = cell(row, c_age); !v.empty()) rec.age = std::stoi(v);
    } catch (const std::exception&) {
      fail(path, row.start_line, "record \"" + rec.id + "\": non-numeric value");
    }
    if (std::string v = cell(row, c_sex); !v.empty()) rec.sex = parse_sex(v);
    validate_record(rec, path, row.start_line);
    records.push_back(std::move(rec));
  }
  return records;
}

void check_unique_ids(const std::vector<TranscriptRecord>& records,
                      const std::filesystem::path& path) {
  std::unordered_set<std::string> seen;
  for (const auto& rec : records) {
    if (!seen.insert(rec.id).second)
      throw CorpusError(path.string() + ": duplicate record id \"" + rec.id + "\"");
  }
}

std::optional<DescriptiveStats> stats_or_absent(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return descriptive_stats(v);
}

}  // namespace

std::optional<Sex> parse_sex(std::string_view s) {
  std::string k = fold_key(s);
  if (k.empty()) return std::nullopt;
  if (k == "female" || k == "f") return Sex::female;
  if (k == "male" || k == "m") return Sex::male;
  return Sex::other_unspecified;
}

std::string_view sex_to_string(Sex s) {
  switch (s) {
    case Sex::female: return "female";
    case Sex::male: return "male";
    case Sex::other_unspecified: return "other/unspecified";
  }
  return "";
}

std::vector<TranscriptRecord> load_corpus(const std::filesystem::path& path,
                                          CorpusFormat format) {
  auto records = format == CorpusFormat::jsonl ? load_jsonl(path) : load_csv(path);
  check_unique_ids(records, path);
  return records;
}

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<TranscriptRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file: " + path.string());
  for (const auto& rec : records) {
    json j;
    j["id"] = rec.id;
    j["text"] = rec.text;
    if (rec.ground_truth_ryff) j["ground_truth_ryff"] = *rec.ground_truth_ryff;
    if (rec.duration_sec) j["duration_sec"] = *rec.duration_sec;
    if (rec.age) j["age"] = *rec.age;
    if (rec.sex) j["sex"] = std::string(sex_to_string(*rec.sex));
    out << j.dump() << "\n";
  }
}

WordCounts word_counts(std::string_view text_in) {
  const auto tokens = text::tokenize(text_in);
  std::set<std::string> distinct(tokens.begin(), tokens.end());
  return {static_cast<long>(tokens.size()), static_cast<long>(distinct.size())};
}

CorpusStats corpus_stats(const std::vector<TranscriptRecord>& records) {
  if (records.empty()) throw CorpusError("corpus_stats on empty corpus");

  std::vector<double> durations, wcounts, ucounts, wps, gts;
  for (const auto& rec : records) {
    const auto wc = word_counts(rec.text);
    wcounts.push_back(static_cast<double>(wc.total));
    ucounts.push_back(static_cast<double>(wc.unique));
    if (rec.duration_sec) {
      durations.push_back(*rec.duration_sec);
      if (*rec.duration_sec > 0.0)
        wps.push_back(static_cast<double>(wc.total) / *rec.duration_sec);
    }
    if (rec.ground_truth_ryff) gts.push_back(static_cast<double>(*rec.ground_truth_ryff));
  }

  CorpusStats stats;
  stats.duration_sec = stats_or_absent(durations);
  stats.word_count = stats_or_absent(wcounts);
  stats.unique_word_count = stats_or_absent(ucounts);
  stats.words_per_sec = stats_or_absent(wps);
  stats.ground_truth_ryff = stats_or_absent(gts);
  return stats;
}

double fraction_unique_words_below(const std::vector<TranscriptRecord>& records,
                                   long threshold) {
  if (records.empty()) throw CorpusError("empty corpus");
  long below = 0;
  for (const auto& rec : records) {
    if (word_counts(rec.text).unique < threshold) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(records.size());
}

}  // namespace pwb
