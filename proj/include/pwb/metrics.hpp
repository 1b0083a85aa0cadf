#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwb/assessment.hpp"

namespace pwb {

enum class CorrMethod { pearson, spearman };
enum class PMethod { t_approx, permutation };

struct CorrelationResult {
  CorrMethod method;
  double coefficient = 0.0;  // in [-1, 1]
  double p_value = 1.0;      // two-tailed
  int n = 0;
  PMethod p_method = PMethod::t_approx;
};

struct RetentionPoint {
  int n_included = 0;
  double retention_pct = 0.0;  // 100 * n / N
  // Empty when the subset has zero rank variance (SCC undefined there).
  std::optional<double> cumulative_scc;
};

struct DescriptiveStats {
  double mean = 0.0;
  double median = 0.0;
  double std_dev = 0.0;  // sample std (n-1); 0 for n == 1
  double min = 0.0;
  double max = 0.0;
  int n = 0;
};

struct HistogramBins {
  double bin_width = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  std::vector<long> counts;  // bins [lo + k*w, lo + (k+1)*w), last closed at hi
  long out_of_range = 0;
};

struct ZeroVarianceError : std::runtime_error {
  ZeroVarianceError() : std::runtime_error("zero variance in input vector") {}
};

// Average ("fractional") ranks, 1-based; tied values share the mean of the
// positions they occupy.
std::vector<double> average_ranks(std::span<const double> values);

// Coefficient-only routes; nullopt when either vector is constant. These are
// what retention curves use so degenerate subsets do not abort the run.
std::optional<double> pearson_coefficient(std::span<const double> x,
                                          std::span<const double> y);
std::optional<double> spearman_coefficient(std::span<const double> x,
                                           std::span<const double> y);

CorrelationResult pearson(std::span<const double> x, std::span<const double> y);
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

// Two-tailed p-value for a correlation coefficient under H0: r = 0, via the
// t transform t = r*sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
// |r| >= 1 yields 0 by convention.
double p_value_t(double coefficient, int n);

// Two-tailed tail mass of Student-t, exposed for direct use and tests.
double student_t_two_tailed(double t, double dof);

// Seeded permutation test: p = (1 + #{|stat_perm| >= |stat_obs|}) / (iters + 1),
// permuting y. Deterministic for a fixed seed.
double p_value_permutation(std::span<const double> x, std::span<const double> y,
                           CorrMethod method, int iterations, std::uint64_t seed);

// Records sorted ascending by |pred - truth| (ties by id); for each n = 2..N
// the SCC over the best-n subset, with retention_pct = 100*n/N. The final
// point equals spearman over the full data.
std::vector<RetentionPoint> retention_curve(std::span<const double> pred,
                                            std::span<const double> truth,
                                            std::span<const std::string> ids);

DescriptiveStats descriptive_stats(std::span<const double> values);

HistogramBins histogram(std::span<const double> values, double bin_width,
                        double lo, double hi);

// Counts of grounded keywords (normalized form) across records and dimensions,
// sorted by count descending then term ascending. Word-cloud weight data.
std::vector<std::pair<std::string, long>> keyword_frequencies(
    const std::vector<GroundedAssessment>& grounded);

// Multiple-testing adjustments over a family of p-values (optional report flag).
std::vector<double> adjust_bonferroni(const std::vector<double>& p);
std::vector<double> adjust_holm(const std::vector<double>& p);

}  // namespace pwb
