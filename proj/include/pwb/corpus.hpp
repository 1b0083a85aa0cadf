#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pwb/metrics.hpp"

namespace pwb {

inline constexpr int kRyffTotalMin = 18;
inline constexpr int kRyffTotalMax = 126;

enum class Sex { female, male, other_unspecified };

struct TranscriptRecord {
  std::string id;
  std::string text;
  std::optional<int> ground_truth_ryff;  // total score in [18, 126]
  std::optional<double> duration_sec;
  std::optional<int> age;
  std::optional<Sex> sex;
};

enum class CorpusFormat { jsonl, csv };

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Records returned in file order. Optional fields absent in the file stay
// missing, never default to zero. Throws CorpusError on duplicate ids,
// malformed rows (with line numbers) or ground-truth scores outside [18, 126].
std::vector<TranscriptRecord> load_corpus(const std::filesystem::path& path,
                                          CorpusFormat format);

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<TranscriptRecord>& records);

struct WordCounts {
  long total = 0;
  long unique = 0;
};

WordCounts word_counts(std::string_view text);

// Per-variable mean/median/std/min/max over present values only; a variable
// with no present values is reported absent. words_per_sec is skipped for
// records with missing or zero duration.
struct CorpusStats {
  std::optional<DescriptiveStats> duration_sec;
  std::optional<DescriptiveStats> word_count;
  std::optional<DescriptiveStats> unique_word_count;
  std::optional<DescriptiveStats> words_per_sec;
  std::optional<DescriptiveStats> ground_truth_ryff;
};

CorpusStats corpus_stats(const std::vector<TranscriptRecord>& records);

// Fraction of records whose unique word count is below the threshold
// (cumulative word-count profile of the corpus).
double fraction_unique_words_below(const std::vector<TranscriptRecord>& records,
                                   long threshold);

std::optional<Sex> parse_sex(std::string_view s);
std::string_view sex_to_string(Sex s);

}  // namespace pwb
