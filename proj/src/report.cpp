#include "themescope/report.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

namespace {

using detail::csv_escape;
using detail::format_g6;

SdgLabel label_for(const LabelMap& labels, const std::string& post_id) {
  auto it = labels.find(post_id);
  if (it == labels.end()) throw ValidationError("post " + post_id + " has no aggregated label");
  return it->second;
}

struct CompanyTally {
  std::size_t total = 0;
  std::size_t relevant = 0;
  std::array<std::size_t, kGoalCount> per_sdg{};
};

std::map<std::string, CompanyTally> tally_companies(const CorpusStore& store, const LabelMap& labels) {
  std::map<std::string, CompanyTally> out;
  for (const auto& post : store.posts()) {
    auto& t = out[post.company_id];
    ++t.total;
    const auto label = label_for(labels, post.post_id);
    if (!label.is_none()) {
      ++t.relevant;
      ++t.per_sdg[static_cast<std::size_t>(label.goal_number() - 1)];
    }
  }
  return out;
}

bool all_equal(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

std::string optional_g6(const std::optional<double>& v) { return v ? format_g6(*v) : std::string(); }

GroupSummary summarize_group(const std::vector<double>& values) {
  GroupSummary g;
  g.n = values.size();
  if (values.empty()) return g;
  std::vector<double> kept = values;
  if (values.size() >= 4) {
    kept = stats::tukey_filter(values);
    g.tukey_applied = true;
  }
  g.n_filtered = kept.size();
  g.mean = stats::mean(kept);
  g.median = stats::median(kept);
  return g;
}

}  // namespace

std::vector<SectorVolumeRow> sector_volume_report(const CorpusStore& store, const LabelMap& labels) {
  const auto tallies = tally_companies(store, labels);
  std::vector<SectorVolumeRow> rows;
  for (Sector sector : kAllSectors) {
    SectorVolumeRow row;
    row.sector = sector;
    std::vector<double> props;
    for (const auto& company : store.companies()) {
      if (company.sector != sector) continue;
      auto it = tallies.find(company.company_id);
      if (it == tallies.end() || it->second.total == 0) continue;
      const double p = static_cast<double>(it->second.relevant) / static_cast<double>(it->second.total);
      row.company_proportions.emplace_back(company.company_id, p);
      props.push_back(p);
      row.total_posts += it->second.total;
      row.relevant_posts += it->second.relevant;
    }
    if (props.empty()) continue;
    row.proportion_box = stats::box_stats(props);
    row.aggregate_sdg_share = static_cast<double>(row.relevant_posts) / static_cast<double>(row.total_posts);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sector_volume_csv(const std::vector<SectorVolumeRow>& rows) {
  std::string out =
      "sector,n_companies,total_posts,relevant_posts,aggregate_sdg_share,"
      "prop_min,prop_q1,prop_median,prop_q3,prop_max,company_proportions\n";
  for (const auto& r : rows) {
    std::string companies;
    for (const auto& [id, p] : r.company_proportions) {
      if (!companies.empty()) companies += ';';
      companies += id + "=" + format_g6(p);
    }
    const auto& b = r.proportion_box;
    out += csv_escape(sector_name(r.sector)) + "," + std::to_string(r.company_proportions.size()) + "," +
           std::to_string(r.total_posts) + "," + std::to_string(r.relevant_posts) + "," +
           format_g6(r.aggregate_sdg_share) + "," + format_g6(b.min) + "," + format_g6(b.q1) + "," +
           format_g6(b.median) + "," + format_g6(b.q3) + "," + format_g6(b.max) + "," +
           csv_escape(companies) + "\n";
  }
  return out;
}

std::vector<SdgDistributionRow> sdg_distribution_report(const CorpusStore& store, const LabelMap& labels) {
  std::map<Sector, SdgDistributionRow> by_sector;
  for (const auto& post : store.posts()) {
    const auto label = label_for(labels, post.post_id);
    if (label.is_none()) continue;
    auto& row = by_sector[store.companies().at(post.company_id).sector];
    ++row.labeled_posts;
    ++row.counts[static_cast<std::size_t>(label.goal_number() - 1)];
  }
  std::vector<SdgDistributionRow> rows;
  for (auto& [sector, row] : by_sector) {
    row.sector = sector;
    for (std::size_t k = 0; k < kGoalCount; ++k) {
      row.shares[k] = static_cast<double>(row.counts[k]) / static_cast<double>(row.labeled_posts);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sdg_distribution_csv(const std::vector<SdgDistributionRow>& rows) {
  std::string out = "sector,sdg,theme,count,share\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < kGoalCount; ++k) {
      const int goal = static_cast<int>(k) + 1;
      out += csv_escape(sector_name(r.sector)) + "," + std::to_string(goal) + "," +
             std::string(theme_name(theme_of(goal))) + "," + std::to_string(r.counts[k]) + "," +
             format_g6(r.shares[k]) + "\n";
    }
  }
  return out;
}

bool in_covid_window(QuarterKey quarter) { return quarter.year == 2020 && quarter.quarter <= 3; }

std::vector<TemporalRow> temporal_report(const CorpusStore& store, const LabelMap& labels) {
  std::map<QuarterKey, TemporalRow> by_quarter;
  for (const auto& post : store.posts()) {
    const auto q = quarter_of(post.created_at);
    auto& row = by_quarter[q];
    ++row.total;
    const auto label = label_for(labels, post.post_id);
    if (!label.is_none()) {
      ++row.sdg_relevant;
      ++row.per_sdg[static_cast<std::size_t>(label.goal_number() - 1)];
    }
  }
  std::vector<TemporalRow> rows;
  for (auto& [q, row] : by_quarter) {
    row.quarter = q;
    row.proportion = static_cast<double>(row.sdg_relevant) / static_cast<double>(row.total);
    row.covid_window = in_covid_window(q);
    rows.push_back(row);
  }
  return rows;
}

std::string temporal_csv(const std::vector<TemporalRow>& rows) {
  std::string out = "year,quarter,total,sdg_relevant,proportion,covid_window";
  for (int k = 1; k <= kGoalCount; ++k) out += ",sdg" + std::to_string(k);
  out += "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.quarter.year) + "," + std::to_string(r.quarter.quarter) + "," +
           std::to_string(r.total) + "," + std::to_string(r.sdg_relevant) + "," + format_g6(r.proportion) +
           "," + (r.covid_window ? "true" : "false");
    for (auto c : r.per_sdg) out += "," + std::to_string(c);
    out += "\n";
  }
  return out;
}

std::vector<CorrelationCell> correlation_report(const CorpusStore& store, const LabelMap& labels,
                                                double significance) {
  const auto tallies = tally_companies(store, labels);
  std::vector<CorrelationCell> cells;
  for (Sector sector : kAllSectors) {
    std::vector<const CompanyTally*> members;
    std::vector<double> risk;
    for (const auto& company : store.companies()) {
      if (company.sector != sector || !company.esg_risk) continue;
      auto it = tallies.find(company.company_id);
      if (it == tallies.end() || it->second.total == 0) continue;
      members.push_back(&it->second);
      risk.push_back(*company.esg_risk);
    }
    if (members.size() < 3 || all_equal(risk)) continue;

    auto emit = [&](std::optional<int> sdg, auto&& numerator) {
      std::vector<double> x;
      for (const auto* t : members) {
        x.push_back(static_cast<double>(numerator(*t)) / static_cast<double>(t->total));
      }
      if (all_equal(x)) return;
      const auto c = stats::spearman(x, risk);
      cells.push_back({sector, sdg, x.size(), c.rho, c.p_value, c.p_value < significance});
    };
    for (int k = 1; k <= kGoalCount; ++k) {
      emit(k, [k](const CompanyTally& t) { return t.per_sdg[static_cast<std::size_t>(k - 1)]; });
    }
    emit(std::nullopt, [](const CompanyTally& t) { return t.relevant; });
  }
  return cells;
}

std::string correlation_csv(const std::vector<CorrelationCell>& cells) {
  std::string out = "sector,sdg,n,rho,p_value,significant\n";
  for (const auto& c : cells) {
    out += csv_escape(sector_name(c.sector)) + "," + (c.sdg ? std::to_string(*c.sdg) : std::string("ALL")) +
           "," + std::to_string(c.n) + "," + format_g6(c.rho) + "," + format_g6(c.p_value) + "," +
           (c.significant ? "true" : "false") + "\n";
  }
  return out;
}

std::vector<EngagementRow> engagement_report(const CorpusStore& store, const LabelMap& labels) {
  std::vector<double> likes[2], retweets[2];  // [0] relevant, [1] other
  for (const auto& post : store.posts()) {
    const int g = label_for(labels, post.post_id).is_none() ? 1 : 0;
    likes[g].push_back(static_cast<double>(post.like_count));
    retweets[g].push_back(static_cast<double>(post.retweet_count));
  }
  std::vector<EngagementRow> rows;
  for (auto [name, series] : {std::pair{"likes", likes}, std::pair{"retweets", retweets}}) {
    EngagementRow row;
    row.metric = name;
    row.relevant = summarize_group(series[0]);
    row.other = summarize_group(series[1]);
    if (!series[0].empty() && !series[1].empty()) {
      row.p_value = stats::mann_whitney_u(series[0], series[1], stats::Alternative::Greater).p_value;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string engagement_csv(const std::vector<EngagementRow>& rows) {
  std::string out =
      "metric,relevant_n,relevant_n_filtered,relevant_tukey_applied,relevant_mean,relevant_median,"
      "other_n,other_n_filtered,other_tukey_applied,other_mean,other_median,p_value\n";
  auto group = [](const GroupSummary& g) {
    return std::to_string(g.n) + "," + std::to_string(g.n_filtered) + "," +
           (g.tukey_applied ? "true" : "false") + "," + optional_g6(g.mean) + "," + optional_g6(g.median);
  };
  for (const auto& r : rows) {
    out += r.metric + "," + group(r.relevant) + "," + group(r.other) + "," + optional_g6(r.p_value) + "\n";
  }
  return out;
}

std::vector<PlateRow> plate_report(const std::vector<ClusterStats>& stats,
                                   const std::vector<SummaryRecord>& summaries,
                                   const PlateFilters& filters) {
  std::map<int, const ClusterSummary*> summary_of;
  for (const auto& s : summaries) summary_of[s.cluster_id] = &s.summary;

  std::map<std::string, std::vector<const ClusterStats*>> by_sector;
  for (const auto& s : stats) {
    if (s.n_companies < filters.min_companies || s.entropy_norm < filters.min_entropy) continue;
    by_sector[s.sector].push_back(&s);
  }

  std::vector<PlateRow> rows;
  for (auto& [sector, eligible] : by_sector) {
    std::vector<PlateRow> sector_rows;
    auto pick = [&](const char* metric, auto significant, auto value) {
      std::vector<const ClusterStats*> ranked;
      for (const auto* s : eligible) {
        if (significant(*s)) ranked.push_back(s);
      }
      std::stable_sort(ranked.begin(), ranked.end(), [&](const ClusterStats* a, const ClusterStats* b) {
        if (value(*a) != value(*b)) return value(*a) > value(*b);
        return a->cluster_id < b->cluster_id;
      });
      if (ranked.size() > filters.top_k) ranked.resize(filters.top_k);
      for (const auto* s : ranked) {
        auto existing = std::find_if(sector_rows.begin(), sector_rows.end(),
                                     [&](const PlateRow& r) { return r.stats.cluster_id == s->cluster_id; });
        if (existing != sector_rows.end()) {
          existing->selected_by.emplace_back(metric);
          continue;
        }
        PlateRow row{*s, {}, {metric}};
        if (auto it = summary_of.find(s->cluster_id); it != summary_of.end()) {
          row.summary = *it->second;
        } else {
          row.summary.available = false;
        }
        sector_rows.push_back(std::move(row));
      }
    };
    pick(
        "delta_r",
        [&](const ClusterStats& s) { return s.delta_r && s.p_risk && *s.p_risk < filters.significance; },
        [](const ClusterStats& s) { return *s.delta_r; });
    pick(
        "delta_e", [&](const ClusterStats& s) { return s.p_engagement < filters.significance; },
        [](const ClusterStats& s) { return s.delta_e; });
    for (auto& r : sector_rows) rows.push_back(std::move(r));
  }
  return rows;
}

std::string plates_json(const std::vector<PlateRow>& plates, const PlateFilters& filters) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return ordered_json(detail::round_g6(v)); };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : ordered_json(nullptr); };

  ordered_json doc;
  doc["filters"] = {{"min_companies", filters.min_companies},
                    {"min_entropy", detail::round_g6(filters.min_entropy)},
                    {"top_k", filters.top_k},
                    {"significance", detail::round_g6(filters.significance)}};
  doc["plates"] = ordered_json::array();
  for (const auto& p : plates) {
    const auto& s = p.stats;
    ordered_json j;
    j["sector"] = s.sector;
    j["cluster_id"] = s.cluster_id;
    j["selected_by"] = p.selected_by;
    j["delta_r"] = opt(s.delta_r);
    j["delta_e"] = num(s.delta_e);
    j["p_risk"] = opt(s.p_risk);
    j["p_engagement"] = num(s.p_engagement);
    j["significant_risk"] = s.significant_risk;
    j["significant_engagement"] = s.significant_engagement;
    j["n_images"] = s.n_images;
    j["n_companies"] = s.n_companies;
    j["entropy_norm"] = num(s.entropy_norm);
    j["companies"] = s.companies;
    j["sample_ids"] = p.summary.sample_ids;
    j["summary_available"] = p.summary.available;
    j["summary"] = p.summary.summary_line;
    j["concepts"] = p.summary.concepts;
    doc["plates"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

}  // namespace themescope
