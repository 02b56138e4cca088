#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "themescope/cluster_stats.hpp"
#include "themescope/corpus.hpp"
#include "themescope/sdg.hpp"
#include "themescope/stats.hpp"

namespace themescope {

/// Aggregated label per post_id. Every report requires one entry per post.
using LabelMap = std::map<std::string, SdgLabel>;

struct SectorVolumeRow {
  Sector sector = Sector::Materials;
  std::vector<std::pair<std::string, double>> company_proportions;  // by company_id
  stats::BoxStats proportion_box;
  std::size_t total_posts = 0;
  std::size_t relevant_posts = 0;
  double aggregate_sdg_share = 0.0;  // pooled relevant / pooled total
};

/// Sectors in table order; sectors without posts are absent.
std::vector<SectorVolumeRow> sector_volume_report(const CorpusStore& store, const LabelMap& labels);
std::string sector_volume_csv(const std::vector<SectorVolumeRow>& rows);

struct SdgDistributionRow {
  Sector sector = Sector::Materials;
  std::size_t labeled_posts = 0;
  std::array<std::size_t, kGoalCount> counts{};
  std::array<double, kGoalCount> shares{};
};

/// Sectors with at least one SDG-labelled post.
std::vector<SdgDistributionRow> sdg_distribution_report(const CorpusStore& store, const LabelMap& labels);
std::string sdg_distribution_csv(const std::vector<SdgDistributionRow>& rows);

struct TemporalRow {
  QuarterKey quarter;
  std::size_t total = 0;
  std::size_t sdg_relevant = 0;
  double proportion = 0.0;
  bool covid_window = false;  // 2020 Q1 through Q3
  std::array<std::size_t, kGoalCount> per_sdg{};
};

bool in_covid_window(QuarterKey quarter);

/// Quarters with at least one post, ascending.
std::vector<TemporalRow> temporal_report(const CorpusStore& store, const LabelMap& labels);
std::string temporal_csv(const std::vector<TemporalRow>& rows);

struct CorrelationCell {
  Sector sector = Sector::Materials;
  std::optional<int> sdg;  // empty means any SDG ("ALL")
  std::size_t n = 0;
  double rho = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

/// Spearman correlation of per-company label proportions with ESG risk.
/// Cells with fewer than three companies, or with a constant proportion or
/// risk vector, are omitted.
std::vector<CorrelationCell> correlation_report(const CorpusStore& store, const LabelMap& labels,
                                                double significance = 0.05);
std::string correlation_csv(const std::vector<CorrelationCell>& cells);

struct GroupSummary {
  std::size_t n = 0;
  std::size_t n_filtered = 0;
  bool tukey_applied = false;  // false when the group has fewer than four posts
  std::optional<double> mean;
  std::optional<double> median;
};

struct EngagementRow {
  std::string metric;  // "likes" or "retweets"
  GroupSummary relevant;
  GroupSummary other;
  /// One-sided Mann-Whitney p (relevant greater) on the unfiltered series.
  std::optional<double> p_value;
};

std::vector<EngagementRow> engagement_report(const CorpusStore& store, const LabelMap& labels);
std::string engagement_csv(const std::vector<EngagementRow>& rows);

struct PlateFilters {
  std::size_t min_companies = 5;
  double min_entropy = 0.3;
  std::size_t top_k = 2;
  double significance = 0.05;
};

struct PlateRow {
  ClusterStats stats;
  ClusterSummary summary;
  std::vector<std::string> selected_by;  // "delta_r" and/or "delta_e"
};

/// Per sector: clusters meeting the company and entropy floors, top_k by
/// delta_r among those significant for risk, then top_k by delta_e among
/// those significant for engagement, each cluster listed once.
std::vector<PlateRow> plate_report(const std::vector<ClusterStats>& stats,
                                   const std::vector<SummaryRecord>& summaries,
                                   const PlateFilters& filters = {});
std::string plates_json(const std::vector<PlateRow>& plates, const PlateFilters& filters);

}  // namespace themescope
