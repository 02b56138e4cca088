#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "themescope/clustering.hpp"
#include "themescope/stats.hpp"

namespace themescope {

/// One image of the background population with its owner's scores.
struct ImageRecord {
  std::string image_id;
  std::string company_id;
  std::optional<double> risk;  // owning company's ESG risk
  double engagement = 0.0;     // likes + retweets of the carrying post
};

/// Sample unit of the risk retention test. Image repeats the company score
/// once per image; Company uses one score per distinct company.
enum class RiskTestUnit { Image, Company };

std::string_view risk_test_unit_name(RiskTestUnit unit);
std::optional<RiskTestUnit> parse_risk_test_unit(std::string_view name);

struct ClusterStatsParams {
  RiskTestUnit risk_unit = RiskTestUnit::Image;
  double significance = 0.05;
};

struct ClusterStats {
  int cluster_id = 0;
  std::string sector;
  std::size_t n_images = 0;
  std::size_t n_companies = 0;
  double entropy_norm = 0.0;
  std::vector<std::string> companies;  // ascending
  /// Risk fields are empty when neither the cluster nor the background has
  /// a company with a risk score.
  std::optional<double> median_risk;
  double median_engagement = 0.0;
  std::optional<double> delta_r;
  double delta_e = 0.0;
  std::optional<double> p_risk;
  double p_engagement = 1.0;
  bool significant_risk = false;
  bool significant_engagement = false;

  friend bool operator==(const ClusterStats&, const ClusterStats&) = default;
};

/// Direction of the one-sided retention test for an observed deviation.
stats::Alternative alternative_for(double deviation);

/// Entropy over per-company image counts, company-level risk medians,
/// image-level engagement medians, and Mann-Whitney retention tests of the
/// cluster against the whole background (which contains the cluster).
ClusterStats compute_cluster_stats(int cluster_id, std::string sector,
                                   std::span<const ImageRecord> cluster,
                                   std::span<const ImageRecord> background,
                                   const ClusterStatsParams& params = {});

void write_cluster_stats_jsonl(const std::vector<ClusterStats>& stats, const std::filesystem::path& path);
std::vector<ClusterStats> read_cluster_stats_jsonl(const std::filesystem::path& path);

struct SummaryRecord {
  int cluster_id = 0;
  ClusterSummary summary;
};

void write_summaries_jsonl(const std::vector<SummaryRecord>& summaries, const std::filesystem::path& path);
std::vector<SummaryRecord> read_summaries_jsonl(const std::filesystem::path& path);

}  // namespace themescope
