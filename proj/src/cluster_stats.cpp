#include "themescope/cluster_stats.hpp"

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

namespace {

using nlohmann::ordered_json;

// Distinct companies with a risk score, one value each, in id order.
std::vector<double> company_risks(std::span<const ImageRecord> images) {
  std::map<std::string, double> by_company;
  for (const auto& img : images) {
    if (img.risk) by_company.emplace(img.company_id, *img.risk);
  }
  std::vector<double> out;
  out.reserve(by_company.size());
  for (const auto& [id, r] : by_company) out.push_back(r);
  return out;
}

std::vector<double> image_risks(std::span<const ImageRecord> images) {
  std::vector<double> out;
  for (const auto& img : images) {
    if (img.risk) out.push_back(*img.risk);
  }
  return out;
}

std::vector<double> engagements(std::span<const ImageRecord> images) {
  std::vector<double> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(img.engagement);
  return out;
}

ordered_json number_or_null(const std::optional<double>& v) {
  return v ? ordered_json(detail::round_g6(*v)) : ordered_json(nullptr);
}

std::optional<double> optional_number(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
}

}  // namespace

std::string_view risk_test_unit_name(RiskTestUnit unit) {
  return unit == RiskTestUnit::Image ? "image" : "company";
}

std::optional<RiskTestUnit> parse_risk_test_unit(std::string_view name) {
  if (name == "image") return RiskTestUnit::Image;
  if (name == "company") return RiskTestUnit::Company;
  return std::nullopt;
}

stats::Alternative alternative_for(double deviation) {
  if (deviation > 0.0) return stats::Alternative::Greater;
  if (deviation < 0.0) return stats::Alternative::Less;
  return stats::Alternative::TwoSided;
}

ClusterStats compute_cluster_stats(int cluster_id, std::string sector,
                                   std::span<const ImageRecord> cluster,
                                   std::span<const ImageRecord> background,
                                   const ClusterStatsParams& params) {
  if (cluster.empty()) throw ValidationError("cluster " + std::to_string(cluster_id) + " is empty");
  if (background.empty()) throw ValidationError("background population is empty");

  ClusterStats s;
  s.cluster_id = cluster_id;
  s.sector = std::move(sector);
  s.n_images = cluster.size();

  std::map<std::string, std::uint64_t> per_company;
  for (const auto& img : cluster) ++per_company[img.company_id];
  s.n_companies = per_company.size();
  for (const auto& [id, count] : per_company) s.companies.push_back(id);
  s.entropy_norm = stats::normalized_entropy(per_company);

  const auto cluster_eng = engagements(cluster);
  const auto background_eng = engagements(background);
  s.median_engagement = stats::median(cluster_eng);
  s.delta_e = s.median_engagement - stats::median(background_eng);
  s.p_engagement =
      stats::mann_whitney_u(cluster_eng, background_eng, alternative_for(s.delta_e)).p_value;
  s.significant_engagement = s.p_engagement < params.significance;

  const auto cluster_companies = company_risks(cluster);
  const auto background_companies = company_risks(background);
  if (!cluster_companies.empty() && !background_companies.empty()) {
    s.median_risk = stats::median(cluster_companies);
    s.delta_r = *s.median_risk - stats::median(background_companies);
    const auto alt = alternative_for(*s.delta_r);
    if (params.risk_unit == RiskTestUnit::Company) {
      s.p_risk = stats::mann_whitney_u(cluster_companies, background_companies, alt).p_value;
    } else {
      s.p_risk = stats::mann_whitney_u(image_risks(cluster), image_risks(background), alt).p_value;
    }
    s.significant_risk = *s.p_risk < params.significance;
  }
  return s;
}

void write_cluster_stats_jsonl(const std::vector<ClusterStats>& stats, const std::filesystem::path& path) {
  std::string out;
  for (const auto& s : stats) {
    ordered_json j;
    j["cluster_id"] = s.cluster_id;
    j["sector"] = s.sector;
    j["n_images"] = s.n_images;
    j["n_companies"] = s.n_companies;
    j["companies"] = s.companies;
    j["entropy_norm"] = detail::round_g6(s.entropy_norm);
    j["median_risk"] = number_or_null(s.median_risk);
    j["median_engagement"] = detail::round_g6(s.median_engagement);
    j["delta_r"] = number_or_null(s.delta_r);
    j["delta_e"] = detail::round_g6(s.delta_e);
    j["p_risk"] = number_or_null(s.p_risk);
    j["p_engagement"] = detail::round_g6(s.p_engagement);
    j["significant_risk"] = s.significant_risk;
    j["significant_engagement"] = s.significant_engagement;
    out += j.dump() + "\n";
  }
  detail::write_file(path, out);
}

std::vector<ClusterStats> read_cluster_stats_jsonl(const std::filesystem::path& path) {
  std::vector<ClusterStats> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    ClusterStats s;
    s.cluster_id = j.at("cluster_id").get<int>();
    s.sector = j.at("sector").get<std::string>();
    s.n_images = j.at("n_images").get<std::size_t>();
    s.n_companies = j.at("n_companies").get<std::size_t>();
    s.companies = j.at("companies").get<std::vector<std::string>>();
    s.entropy_norm = j.at("entropy_norm").get<double>();
    s.median_risk = optional_number(j.at("median_risk"));
    s.median_engagement = j.at("median_engagement").get<double>();
    s.delta_r = optional_number(j.at("delta_r"));
    s.delta_e = j.at("delta_e").get<double>();
    s.p_risk = optional_number(j.at("p_risk"));
    s.p_engagement = j.at("p_engagement").get<double>();
    s.significant_risk = j.at("significant_risk").get<bool>();
    s.significant_engagement = j.at("significant_engagement").get<bool>();
    out.push_back(std::move(s));
  });
  return out;
}

void write_summaries_jsonl(const std::vector<SummaryRecord>& summaries, const std::filesystem::path& path) {
  std::string out;
  for (const auto& r : summaries) {
    ordered_json j;
    j["cluster_id"] = r.cluster_id;
    j["available"] = r.summary.available;
    j["summary"] = r.summary.summary_line;
    j["concepts"] = r.summary.concepts;
    j["sample_ids"] = r.summary.sample_ids;
    out += j.dump() + "\n";
  }
  detail::write_file(path, out);
}

std::vector<SummaryRecord> read_summaries_jsonl(const std::filesystem::path& path) {
  std::vector<SummaryRecord> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    SummaryRecord r;
    r.cluster_id = j.at("cluster_id").get<int>();
    r.summary.available = j.at("available").get<bool>();
    r.summary.summary_line = j.at("summary").get<std::string>();
    r.summary.concepts = j.at("concepts").get<std::vector<std::string>>();
    r.summary.sample_ids = j.at("sample_ids").get<std::vector<std::string>>();
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace themescope
