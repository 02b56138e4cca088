#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "themescope/sdg.hpp"

namespace themescope {

using Timestamp = std::chrono::sys_seconds;

struct Company {
  std::string company_id;
  std::string name;
  std::string ticker;
  Sector sector = Sector::Materials;
  /// Risk points; absent when the provider has no score for the company.
  std::optional<double> esg_risk;

  friend bool operator==(const Company&, const Company&) = default;
};

/// Companies keyed by company_id, iterated in ascending id order.
class CompanyTable {
 public:
  /// Throws ValidationError on a duplicate id or a negative risk score.
  void add(Company company);

  const Company* find(std::string_view company_id) const;
  const Company& at(std::string_view company_id) const;
  bool contains(std::string_view company_id) const { return find(company_id) != nullptr; }

  std::size_t size() const { return companies_.size(); }
  bool empty() const { return companies_.empty(); }
  auto begin() const { return companies_.begin(); }
  auto end() const { return companies_.end(); }

  friend bool operator==(const CompanyTable& a, const CompanyTable& b) {
    return a.companies_ == b.companies_;
  }

 private:
  std::vector<Company> companies_;  // sorted by company_id
};

struct Post {
  std::string post_id;
  std::string company_id;
  Timestamp created_at{};
  std::string text;
  std::uint64_t like_count = 0;
  std::uint64_t retweet_count = 0;
  std::uint64_t reply_count = 0;
  std::uint64_t quote_count = 0;
  std::vector<std::string> media_ids;
  std::vector<std::string> hashtags;

  friend bool operator==(const Post&, const Post&) = default;
};

struct QuarterKey {
  int year = 0;
  int quarter = 1;

  friend auto operator<=>(const QuarterKey&, const QuarterKey&) = default;
};

struct LoadReport {
  std::size_t loaded = 0;
  std::size_t orphans = 0;     // company_id not in the table
  std::size_t malformed = 0;   // unparsable lines skipped
  std::size_t duplicates = 0;  // repeated post_id, first occurrence kept
  std::vector<std::string> warnings;
};

enum class MalformedLinePolicy { Skip, Abort };

struct PostLoadOptions {
  MalformedLinePolicy on_malformed = MalformedLinePolicy::Abort;
};

/// Posts, companies and (optionally) aggregated labels. Immutable once built;
/// concurrent reads need no synchronisation.
class CorpusStore {
 public:
  CorpusStore() = default;
  /// Posts are re-ordered by post_id. Throws ValidationError if a post
  /// references an unknown company or two posts share an id.
  CorpusStore(CompanyTable companies, std::vector<Post> posts);

  const CompanyTable& companies() const { return companies_; }
  const std::vector<Post>& posts() const { return posts_; }
  const Post* find_post(std::string_view post_id) const;
  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }

  const LoadReport& load_report() const { return report_; }
  void set_load_report(LoadReport report) { report_ = std::move(report); }

  /// Every key must name a stored post.
  void attach_annotations(std::map<std::string, SdgLabel> labels);
  bool has_annotations() const { return annotations_.has_value(); }
  /// Aggregated label of a post; None when the post has no annotation.
  SdgLabel label_of(std::string_view post_id) const;
  const std::map<std::string, SdgLabel>* annotations() const {
    return annotations_ ? &*annotations_ : nullptr;
  }

 private:
  CompanyTable companies_;
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<std::map<std::string, SdgLabel>> annotations_;
  LoadReport report_;
};

/// Reads CSV (header company_id,name,ticker,sector,esg_risk) or, for a
/// .jsonl/.json extension, one JSON object per line with the same keys.
CompanyTable load_companies(const std::filesystem::path& path);

CorpusStore load_posts(const std::filesystem::path& path, const CompanyTable& companies,
                       const PostLoadOptions& options = {});

/// '#' followed by a maximal run of ASCII letters, digits and underscores;
/// lowercased, '#' stripped, first-occurrence order, no repeats.
std::vector<std::string> extract_hashtags(std::string_view text);

/// Lowercases, strips leading '#', drops empties and repeats.
std::vector<std::string> normalize_hashtags(const std::vector<std::string>& tags);

/// Likes plus retweets. Replies and quotes do not count.
inline std::uint64_t engagement(const Post& post) {
  return post.like_count + post.retweet_count;
}

QuarterKey quarter_of(Timestamp t);

/// Accepts RFC 3339 date-times with 'Z' or a numeric offset; fractional
/// seconds are truncated. Result is UTC.
std::optional<Timestamp> parse_rfc3339(std::string_view text);
/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_rfc3339(Timestamp t);

void write_companies_csv(const CompanyTable& companies, const std::filesystem::path& path);
void write_posts_jsonl(const std::vector<Post>& posts, const std::filesystem::path& path);

/// Persists companies.csv and posts.jsonl under `dir`.
void save_store(const CorpusStore& store, const std::filesystem::path& dir);
CorpusStore load_store(const std::filesystem::path& dir);

}  // namespace themescope
