#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pwb {

struct AlignmentCounts {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long hits = 0;
  long n_ref = 0;  // hits + substitutions + deletions == n_ref
};

struct WerReport {
  double wer_pct = 0.0;  // sub_pct + del_pct + ins_pct, exact before rounding
  double sub_pct = 0.0;
  double del_pct = 0.0;
  double ins_pct = 0.0;
  AlignmentCounts counts;
};

// Scoring normalization: lowercase, strip token-edge punctuation,
// whitespace-split, drop empty tokens. Interior apostrophes survive.
std::vector<std::string> normalize_for_wer(std::string_view text);

// Minimum-edit-distance alignment with unit costs. Among cost ties the
// backtrace prefers hit > substitution > deletion > insertion, so the
// S/D/I split is deterministic. Throws on an empty reference.
AlignmentCounts align(const std::vector<std::string>& ref,
                      const std::vector<std::string>& hyp);

WerReport wer(const AlignmentCounts& counts);

// Micro-average: counts summed over pairs before dividing by total
// reference words.
WerReport corpus_wer(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs);

}  // namespace pwb
