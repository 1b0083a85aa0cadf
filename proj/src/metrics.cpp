#include "pwb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "pwb/text.hpp"

namespace pwb {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("correlation inputs differ in length");
  if (x.size() < 3)
    throw std::invalid_argument("correlation requires at least 3 pairs");
}

// Regularized incomplete beta I_x(a, b) via the continued-fraction expansion
// (modified Lentz), the standard route to the Student-t CDF.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share the average 1-based rank
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson_coefficient(std::span<const double> x,
                                          std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::optional<double> spearman_coefficient(std::span<const double> x,
                                           std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_coefficient(rx, ry);
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto r = pearson_coefficient(x, y);
  if (!r) throw ZeroVarianceError{};
  const int n = static_cast<int>(x.size());
  return {CorrMethod::pearson, *r, p_value_t(*r, n), n, PMethod::t_approx};
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rho = spearman_coefficient(x, y);
  if (!rho) throw ZeroVarianceError{};
  const int n = static_cast<int>(x.size());
  return {CorrMethod::spearman, *rho, p_value_t(*rho, n), n, PMethod::t_approx};
}

double student_t_two_tailed(double t, double dof) {
  if (!std::isfinite(t)) return 0.0;
  // P(|T| >= t) = I_{dof/(dof+t^2)}(dof/2, 1/2)
  const double x = dof / (dof + t * t);
  double p = ibeta(0.5 * dof, 0.5, x);
  return std::clamp(p, 0.0, 1.0);
}

double p_value_t(double coefficient, int n) {
  if (n < 3) throw std::invalid_argument("p_value_t requires n >= 3");
  const double r = std::clamp(coefficient, -1.0, 1.0);
  if (std::fabs(r) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = r * std::sqrt(dof / (1.0 - r * r));
  return student_t_two_tailed(t, dof);
}

double p_value_permutation(std::span<const double> x, std::span<const double> y,
                           CorrMethod method, int iterations, std::uint64_t seed) {
  check_pair(x, y);
  if (iterations < 1000)
    throw std::invalid_argument("permutation test requires >= 1000 iterations");

  // Rank once up front: permuting y then ranking equals permuting y's ranks.
  std::vector<double> wx, wy;
  if (method == CorrMethod::spearman) {
    wx = average_ranks(x);
    wy = average_ranks(y);
  } else {
    wx.assign(x.begin(), x.end());
    wy.assign(y.begin(), y.end());
  }

  const auto observed = pearson_coefficient(wx, wy);
  if (!observed) throw ZeroVarianceError{};
  const double threshold = std::fabs(*observed) - 1e-12;

  // Means and sums of squares are permutation-invariant; only the cross term
  // changes per shuffle.
  const std::size_t n = wx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += wx[i];
    my += wy[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0;
  std::vector<double> dx(n), dy(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = wx[i] - mx;
    dy[i] = wy[i] - my;
    sxx += dx[i] * dx[i];
    syy += dy[i] * dy[i];
  }
  const double denom = std::sqrt(sxx * syy);

  std::uint64_t state = seed;
  long hits = 0;
  for (int it = 0; it < iterations; ++it) {
    // Fisher-Yates on dy
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(splitmix64(state) % (i + 1));
      std::swap(dy[i], dy[j]);
    }
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sxy += dx[i] * dy[i];
    if (std::fabs(sxy / denom) >= threshold) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(iterations + 1);
}

std::vector<RetentionPoint> retention_curve(std::span<const double> pred,
                                            std::span<const double> truth,
                                            std::span<const std::string> ids) {
  const std::size_t n = pred.size();
  if (truth.size() != n || ids.size() != n)
    throw std::invalid_argument("retention_curve inputs differ in length");
  if (n < 2) throw std::invalid_argument("retention_curve requires N >= 2");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ea = std::fabs(pred[a] - truth[a]);
    const double eb = std::fabs(pred[b] - truth[b]);
    if (ea != eb) return ea < eb;
    return ids[a] < ids[b];
  });

  std::vector<RetentionPoint> curve;
  curve.reserve(n - 1);
  std::vector<std::size_t> subset;
  for (std::size_t k = 2; k <= n; ++k) {
    subset.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    // Restore original input order inside the subset so the final point is the
    // bit-exact global SCC.
    std::sort(subset.begin(), subset.end());
    std::vector<double> ps, ts;
    ps.reserve(k);
    ts.reserve(k);
    for (std::size_t idx : subset) {
      ps.push_back(pred[idx]);
      ts.push_back(truth[idx]);
    }
    RetentionPoint point;
    point.n_included = static_cast<int>(k);
    point.retention_pct = 100.0 * static_cast<double>(k) / static_cast<double>(n);
    point.cumulative_scc = spearman_coefficient(ps, ts);
    curve.push_back(std::move(point));
  }
  return curve;
}

DescriptiveStats descriptive_stats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("descriptive_stats on empty input");
  const int n = static_cast<int>(values.size());
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= static_cast<double>(n);

  double median;
  if (n % 2 == 1) {
    median = sorted[static_cast<std::size_t>(n / 2)];
  } else {
    median = 0.5 * (sorted[static_cast<std::size_t>(n / 2 - 1)] +
                    sorted[static_cast<std::size_t>(n / 2)]);
  }

  double std_dev = 0.0;
  if (n >= 2) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    std_dev = std::sqrt(ss / static_cast<double>(n - 1));
  }

  return {mean, median, std_dev, sorted.front(), sorted.back(), n};
}

HistogramBins histogram(std::span<const double> values, double bin_width,
                        double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("histogram range requires lo < hi");
  if (!(bin_width > 0.0)) throw std::invalid_argument("histogram bin width must be > 0");

  const int nbins = static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-12));
  HistogramBins bins;
  bins.bin_width = bin_width;
  bins.range_lo = lo;
  bins.range_hi = hi;
  bins.counts.assign(static_cast<std::size_t>(std::max(nbins, 1)), 0);

  for (double v : values) {
    if (v < lo || v > hi) {
      ++bins.out_of_range;
      continue;
    }
    int k;
    if (v == hi) {
      k = nbins - 1;  // last bin is closed at hi
    } else {
      k = static_cast<int>((v - lo) / bin_width);
      if (k >= nbins) k = nbins - 1;
    }
    ++bins.counts[static_cast<std::size_t>(k)];
  }
  return bins;
}

std::vector<std::pair<std::string, long>> keyword_frequencies(
    const std::vector<GroundedAssessment>& grounded) {
  std::map<std::string, long> counts;
  for (const auto& g : grounded) {
    for (const auto& dim_keywords : g.grounded_keywords) {
      for (const auto& kw : dim_keywords) {
        const std::string norm = text::join(text::tokenize(kw));
        if (!norm.empty()) ++counts[norm];
      }
    }
  }
  std::vector<std::pair<std::string, long>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

std::vector<double> adjust_bonferroni(const std::vector<double>& p) {
  const double m = static_cast<double>(p.size());
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::min(1.0, p[i] * m);
  return out;
}

std::vector<double> adjust_holm(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> out(m, 0.0);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double adj = std::min(1.0, static_cast<double>(m - i) * p[order[i]]);
    running = std::max(running, adj);
    out[order[i]] = running;
  }
  return out;
}

}  // namespace pwb
