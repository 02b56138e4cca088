#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace themescope::stats {

/// Shannon entropy of the class distribution divided by log(k), k being the
/// number of classes. A single class yields 0. Every count must be positive.
double normalized_entropy(std::span<const std::uint64_t> counts);

template <typename Key>
double normalized_entropy(const std::map<Key, std::uint64_t>& counts) {
  std::vector<std::uint64_t> v;
  v.reserve(counts.size());
  for (const auto& [k, c] : counts) v.push_back(c);
  return normalized_entropy(v);
}

/// Average of the two central order statistics when the size is even.
double median(std::span<const double> values);

/// Linear-interpolation quantile at position q*(n-1) of the sorted values.
double quantile(std::span<const double> values, double q);

struct Deviations {
  double delta_r = 0.0;
  double delta_e = 0.0;
};

/// Signed difference of cluster medians from the population medians.
Deviations cluster_deviations(std::span<const double> cluster_risk,
                              std::span<const double> cluster_engagement,
                              double population_risk_median,
                              double population_engagement_median);

enum class Alternative { Less, Greater, TwoSided };
enum class TestMethod { Exact, NormalApproximation };

/// Method selection for mann_whitney_u. Auto picks Exact for tie-free samples
/// with |x|*|y| <= kExactCellLimit.
enum class MethodChoice { Auto, Exact, NormalApproximation };

inline constexpr std::size_t kExactCellLimit = 400;

struct TestResult {
  /// U for the first sample: pairs with x > y plus half the tied pairs.
  double u_statistic = 0.0;
  double p_value = 1.0;
  TestMethod method = TestMethod::Exact;
  Alternative alternative = Alternative::TwoSided;
};

/// Mann-Whitney U test of x against y. "Less" tests whether x tends to be
/// smaller than y. Identical multisets (including all-equal pooled
/// values) give p = 1 for every alternative.
/// Throws ValidationError on an empty sample, or when Exact is forced on tied data.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          Alternative alternative, MethodChoice method = MethodChoice::Auto);

/// Number of arrangements of n x-values and m y-values (no ties) for every
/// value of U in 0..n*m.
std::vector<std::uint64_t> u_distribution(std::size_t n, std::size_t m);

/// 1-based ranks, ties receive the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
};

/// Spearman rank correlation with a two-sided Student-t p-value on n-2
/// degrees of freedom. Throws on length mismatch, n < 3 or a constant input.
Correlation spearman(std::span<const double> x, std::span<const double> y);

struct Fences {
  double q1 = 0.0;
  double q3 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

Fences tukey_fences(std::span<const double> values);

/// Values inside [Q1 - 1.5 IQR, Q3 + 1.5 IQR] in their original order.
/// Requires at least four values.
std::vector<double> tukey_filter(std::span<const double> values);

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

BoxStats box_stats(std::span<const double> values);

double mean(std::span<const double> values);

/// Upper tail of the standard normal.
double normal_sf(double z);

}  // namespace themescope::stats
