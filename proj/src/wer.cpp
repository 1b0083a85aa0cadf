#include "pwb/wer.hpp"

#include "pwb/text.hpp"

namespace pwb {

std::vector<std::string> normalize_for_wer(std::string_view text_in) {
  return text::tokenize(text_in);
}

AlignmentCounts align(const std::vector<std::string>& ref,
                      const std::vector<std::string>& hyp) {
  if (ref.empty()) throw std::invalid_argument("align requires a non-empty reference");

  const std::size_t R = ref.size();
  const std::size_t H = hyp.size();
  std::vector<std::vector<long>> d(R + 1, std::vector<long>(H + 1, 0));
  for (std::size_t i = 0; i <= R; ++i) d[i][0] = static_cast<long>(i);
  for (std::size_t j = 0; j <= H; ++j) d[0][j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= R; ++i) {
    for (std::size_t j = 1; j <= H; ++j) {
      const long diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const long del = d[i - 1][j] + 1;
      const long ins = d[i][j - 1] + 1;
      d[i][j] = std::min(diag, std::min(del, ins));
    }
  }

  AlignmentCounts counts;
  counts.n_ref = static_cast<long>(R);
  std::size_t i = R, j = H;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      ++counts.hits;
      --i;
      --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] && d[i][j] == d[i - 1][j - 1] + 1) {
      ++counts.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

WerReport wer(const AlignmentCounts& counts) {
  if (counts.n_ref < 1) throw std::invalid_argument("wer requires n_ref >= 1");
  WerReport report;
  report.counts = counts;
  const double n = static_cast<double>(counts.n_ref);
  report.sub_pct = 100.0 * static_cast<double>(counts.substitutions) / n;
  report.del_pct = 100.0 * static_cast<double>(counts.deletions) / n;
  report.ins_pct = 100.0 * static_cast<double>(counts.insertions) / n;
  report.wer_pct = report.sub_pct + report.del_pct + report.ins_pct;
  return report;
}

WerReport corpus_wer(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("corpus_wer on empty pair list");
  AlignmentCounts totals;
  for (const auto& [ref, hyp] : pairs) {
    const AlignmentCounts c = align(ref, hyp);
    totals.substitutions += c.substitutions;
    totals.deletions += c.deletions;
    totals.insertions += c.insertions;
    totals.hits += c.hits;
    totals.n_ref += c.n_ref;
  }
  return wer(totals);
}

}  // namespace pwb
