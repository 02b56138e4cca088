#include "themescope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "themescope/error.hpp"

namespace themescope::stats {

double normalized_entropy(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw ValidationError("entropy of an empty distribution");
  double total = 0.0;
  for (auto c : counts) {
    if (c == 0) throw ValidationError("entropy input has a zero count");
    total += static_cast<double>(c);
  }
  if (counts.size() == 1) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  const double normalized = h / std::log(static_cast<double>(counts.size()));
  return std::clamp(normalized, 0.0, 1.0);
}

double median(std::span<const double> values) {
  if (values.empty()) throw ValidationError("median of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Deviations cluster_deviations(std::span<const double> cluster_risk,
                              std::span<const double> cluster_engagement,
                              double population_risk_median,
                              double population_engagement_median) {
  return Deviations{median(cluster_risk) - population_risk_median,
                    median(cluster_engagement) - population_engagement_median};
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<std::uint64_t> u_distribution(std::size_t n, std::size_t m) {
  const std::size_t max_u = n * m;
  // level[k][u]: arrangements of k x-values among the first j y-values with
  // U = u. The largest element is either a y (U unchanged) or an x that
  // beats all j y-values: c(u; k, j) = c(u; k, j-1) + c(u - j; k-1, j).
  std::vector<std::vector<std::uint64_t>> level(n + 1, std::vector<std::uint64_t>(max_u + 1, 0));
  for (auto& row : level) row[0] = 1;  // j = 0: only U = 0
  for (std::size_t j = 1; j <= m; ++j) {
    std::vector<std::vector<std::uint64_t>> next(n + 1, std::vector<std::uint64_t>(max_u + 1, 0));
    next[0][0] = 1;
    for (std::size_t k = 1; k <= n; ++k) {
      for (std::size_t u = 0; u <= k * j; ++u) {
        std::uint64_t c = level[k][u];
        if (u >= j) c += next[k - 1][u - j];
        next[k][u] = c;
      }
    }
    level = std::move(next);
  }
  return std::move(level[n]);
}

namespace {

bool has_ties(std::span<const double> x, std::span<const double> y) {
  std::vector<double> all(x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  std::sort(all.begin(), all.end());
  return std::adjacent_find(all.begin(), all.end()) != all.end();
}

double clamp_p(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          Alternative alternative, MethodChoice method) {
  if (x.empty() || y.empty()) throw ValidationError("Mann-Whitney U needs two non-empty samples");
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  const double nm = static_cast<double>(n) * static_cast<double>(m);

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = average_ranks(pooled);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) rank_sum += ranks[i];
  const double u = rank_sum - static_cast<double>(n) * (static_cast<double>(n) + 1.0) / 2.0;

  TestResult result;
  result.u_statistic = u;
  result.alternative = alternative;

  std::vector<double> sx(x.begin(), x.end()), sy(y.begin(), y.end());
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  if (sx == sy) {
    result.p_value = 1.0;  // identical multisets carry no evidence of a shift
    return result;
  }

  const bool ties = has_ties(x, y);
  bool exact = false;
  switch (method) {
    case MethodChoice::Auto: exact = !ties && n * m <= kExactCellLimit; break;
    case MethodChoice::Exact:
      if (ties) throw ValidationError("exact Mann-Whitney p requires tie-free samples");
      exact = true;
      break;
    case MethodChoice::NormalApproximation: exact = false; break;
  }

  if (exact) {
    result.method = TestMethod::Exact;
    const auto dist = u_distribution(n, m);
    const auto observed = static_cast<std::size_t>(std::llround(u));
    long double total = 0, at_most = 0, at_least = 0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      const auto c = static_cast<long double>(dist[k]);
      total += c;
      if (k <= observed) at_most += c;
      if (k >= observed) at_least += c;
    }
    const double p_less = static_cast<double>(at_most / total);
    const double p_greater = static_cast<double>(at_least / total);
    switch (alternative) {
      case Alternative::Less: result.p_value = p_less; break;
      case Alternative::Greater: result.p_value = p_greater; break;
      case Alternative::TwoSided: result.p_value = std::min(1.0, 2.0 * std::min(p_less, p_greater)); break;
    }
    result.p_value = clamp_p(result.p_value);
    return result;
  }

  result.method = TestMethod::NormalApproximation;
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double big_n = static_cast<double>(n + m);
  const double variance = nm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  if (!(variance > 0.0)) {
    result.p_value = 1.0;
    return result;
  }
  const double sd = std::sqrt(variance);
  const double mu = nm / 2.0;
  switch (alternative) {
    case Alternative::Less: result.p_value = normal_sf((mu - u - 0.5) / sd); break;
    case Alternative::Greater: result.p_value = normal_sf((u - mu - 0.5) / sd); break;
    case Alternative::TwoSided:
      result.p_value = std::min(1.0, 2.0 * normal_sf((std::abs(u - mu) - 0.5) / sd));
      break;
  }
  result.p_value = clamp_p(result.p_value);
  return result;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ValidationError("pearson: bad input lengths");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.size() < 3) throw ValidationError("spearman: need at least 3 pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double rho = pearson(rx, ry);
  Correlation out{rho, 0.0};
  if (std::abs(rho) >= 1.0) return out;
  const double df = static_cast<double>(x.size() - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  boost::math::students_t dist(df);
  out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return out;
}

Fences tukey_fences(std::span<const double> values) {
  Fences f;
  f.q1 = quantile(values, 0.25);
  f.q3 = quantile(values, 0.75);
  const double iqr = f.q3 - f.q1;
  f.lower = f.q1 - 1.5 * iqr;
  f.upper = f.q3 + 1.5 * iqr;
  return f;
}

std::vector<double> tukey_filter(std::span<const double> values) {
  if (values.size() < 4) throw ValidationError("Tukey's fences need at least 4 values");
  const auto f = tukey_fences(values);
  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values) {
    if (v >= f.lower && v <= f.upper) kept.push_back(v);
  }
  return kept;
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw ValidationError("box stats of an empty sample");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return BoxStats{*lo, quantile(values, 0.25), median(values), quantile(values, 0.75), *hi};
}

}  // namespace themescope::stats
