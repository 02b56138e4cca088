#include "themescope/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

using json = nlohmann::json;

void CompanyTable::add(Company company) {
  if (company.company_id.empty()) throw ValidationError("empty company_id");
  if (company.esg_risk && !(*company.esg_risk >= 0.0)) {
    throw ValidationError("negative esg_risk for company " + company.company_id);
  }
  auto it = std::lower_bound(
      companies_.begin(), companies_.end(), company.company_id,
      [](const Company& c, const std::string& id) { return c.company_id < id; });
  if (it != companies_.end() && it->company_id == company.company_id) {
    throw ValidationError("duplicate company_id " + company.company_id);
  }
  companies_.insert(it, std::move(company));
}

const Company* CompanyTable::find(std::string_view company_id) const {
  auto it = std::lower_bound(
      companies_.begin(), companies_.end(), company_id,
      [](const Company& c, std::string_view id) { return c.company_id < id; });
  if (it == companies_.end() || it->company_id != company_id) return nullptr;
  return &*it;
}

const Company& CompanyTable::at(std::string_view company_id) const {
  const Company* c = find(company_id);
  if (c == nullptr) throw ValidationError("unknown company_id " + std::string(company_id));
  return *c;
}

CorpusStore::CorpusStore(CompanyTable companies, std::vector<Post> posts)
    : companies_(std::move(companies)), posts_(std::move(posts)) {
  std::sort(posts_.begin(), posts_.end(),
            [](const Post& a, const Post& b) { return a.post_id < b.post_id; });
  index_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    const Post& p = posts_[i];
    if (!companies_.contains(p.company_id)) {
      throw ValidationError("post " + p.post_id + " references unknown company " + p.company_id);
    }
    if (!index_.emplace(p.post_id, i).second) {
      throw ValidationError("duplicate post_id " + p.post_id);
    }
  }
  report_.loaded = posts_.size();
}

const Post* CorpusStore::find_post(std::string_view post_id) const {
  auto it = index_.find(std::string(post_id));
  return it == index_.end() ? nullptr : &posts_[it->second];
}

void CorpusStore::attach_annotations(std::map<std::string, SdgLabel> labels) {
  for (const auto& [post_id, label] : labels) {
    if (find_post(post_id) == nullptr) {
      throw ValidationError("annotation for unknown post " + post_id);
    }
  }
  annotations_ = std::move(labels);
}

SdgLabel CorpusStore::label_of(std::string_view post_id) const {
  if (!annotations_) return SdgLabel::none();
  auto it = annotations_->find(std::string(post_id));
  return it == annotations_->end() ? SdgLabel::none() : it->second;
}

namespace {

std::optional<double> parse_risk(std::string_view text, std::size_t line) {
  text = detail::trim(text);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("esg_risk is not a number: '" + std::string(text) + "'", line);
  }
  if (!(value >= 0.0)) throw ParseError("esg_risk must be non-negative", line);
  return value;
}

Company make_company(std::string id, std::string name, std::string ticker,
                     std::string_view sector, std::optional<double> risk, std::size_t line) {
  auto parsed = parse_sector(detail::trim(sector));
  if (!parsed) throw ParseError("unknown sector '" + std::string(sector) + "'", line);
  if (id.empty()) throw ParseError("empty company_id", line);
  return Company{std::move(id), std::move(name), std::move(ticker), *parsed, risk};
}

void add_row(CompanyTable& table, Company company, std::size_t line) {
  if (table.contains(company.company_id)) {
    throw ParseError("duplicate company_id '" + company.company_id + "'", line);
  }
  table.add(std::move(company));
}

bool has_json_extension(const std::filesystem::path& path) {
  auto ext = detail::to_lower(path.extension().string());
  return ext == ".jsonl" || ext == ".json";
}

}  // namespace

CompanyTable load_companies(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open companies file " + path.string());
  CompanyTable table;
  std::size_t line_no = 0;

  if (has_json_extension(path)) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      json row;
      try {
        row = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
      }
      std::optional<double> risk;
      if (row.contains("esg_risk") && !row["esg_risk"].is_null()) {
        if (row["esg_risk"].is_string()) {
          risk = parse_risk(row["esg_risk"].get<std::string>(), line_no);
        } else {
          risk = row["esg_risk"].get<double>();
          if (!(*risk >= 0.0)) throw ParseError("esg_risk must be non-negative", line_no);
        }
      }
      add_row(table,
              make_company(row.value("company_id", ""), row.value("name", ""),
                           row.value("ticker", ""), row.value("sector", ""), risk, line_no),
              line_no);
    }
    return table;
  }

  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields, line_no)) return table;
  const std::vector<std::string> expected = {"company_id", "name", "ticker", "sector", "esg_risk"};
  for (auto& f : fields) f = std::string(detail::trim(f));
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  if (fields != expected) {
    throw ParseError("expected header company_id,name,ticker,sector,esg_risk", line_no);
  }
  while (detail::read_csv_record(in, fields, line_no)) {
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    if (fields.size() != 5) {
      throw ParseError("expected 5 fields, got " + std::to_string(fields.size()), line_no);
    }
    add_row(table,
            make_company(std::string(detail::trim(fields[0])), fields[1], fields[2], fields[3],
                         parse_risk(fields[4], line_no), line_no),
            line_no);
  }
  return table;
}

namespace {

std::uint64_t count_field(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return 0;
  const auto& v = obj[key];
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    auto n = v.get<std::int64_t>();
    if (n < 0) throw std::invalid_argument(std::string(key) + " is negative");
    return static_cast<std::uint64_t>(n);
  }
  throw std::invalid_argument(std::string(key) + " is not an integer");
}

Post parse_post(const json& obj) {
  Post p;
  p.post_id = obj.at("post_id").get<std::string>();
  p.company_id = obj.at("company_id").get<std::string>();
  auto ts = parse_rfc3339(obj.at("created_at").get<std::string>());
  if (!ts) throw std::invalid_argument("created_at is not RFC 3339");
  p.created_at = *ts;
  p.text = obj.at("text").get<std::string>();
  p.like_count = count_field(obj, "like_count");
  p.retweet_count = count_field(obj, "retweet_count");
  p.reply_count = count_field(obj, "reply_count");
  p.quote_count = count_field(obj, "quote_count");
  if (obj.contains("media_ids") && !obj["media_ids"].is_null()) {
    p.media_ids = obj["media_ids"].get<std::vector<std::string>>();
  }
  if (obj.contains("hashtags") && !obj["hashtags"].is_null()) {
    p.hashtags = normalize_hashtags(obj["hashtags"].get<std::vector<std::string>>());
  } else {
    p.hashtags = extract_hashtags(p.text);
  }
  if (p.post_id.empty()) throw std::invalid_argument("empty post_id");
  return p;
}

}  // namespace

CorpusStore load_posts(const std::filesystem::path& path, const CompanyTable& companies,
                       const PostLoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open posts file " + path.string());

  LoadReport report;
  std::vector<Post> posts;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    Post post;
    try {
      post = parse_post(json::parse(line));
    } catch (const std::exception& e) {
      if (options.on_malformed == MalformedLinePolicy::Abort) {
        throw ParseError(std::string("malformed post: ") + e.what(), line_no);
      }
      ++report.malformed;
      report.warnings.push_back("line " + std::to_string(line_no) + ": malformed post skipped");
      continue;
    }
    if (!companies.contains(post.company_id)) {
      ++report.orphans;
      report.warnings.push_back("line " + std::to_string(line_no) + ": unknown company '" +
                                post.company_id + "', post skipped");
      continue;
    }
    if (!seen.insert(post.post_id).second) {
      ++report.duplicates;
      report.warnings.push_back("line " + std::to_string(line_no) + ": duplicate post_id '" +
                                post.post_id + "' skipped");
      continue;
    }
    posts.push_back(std::move(post));
  }
  CorpusStore store(companies, std::move(posts));
  report.loaded = store.size();
  store.set_load_report(std::move(report));
  return store;
}

std::vector<std::string> extract_hashtags(std::string_view text) {
  std::vector<std::string> out;
  auto is_tag_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '#') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_tag_char(text[j])) ++j;
    if (j > i + 1) {
      auto tag = detail::to_lower(text.substr(i + 1, j - i - 1));
      if (std::find(out.begin(), out.end(), tag) == out.end()) out.push_back(std::move(tag));
    }
    i = j - 1;
  }
  return out;
}

std::vector<std::string> normalize_hashtags(const std::vector<std::string>& tags) {
  std::vector<std::string> out;
  for (const auto& raw : tags) {
    std::string_view t = detail::trim(raw);
    while (!t.empty() && t.front() == '#') t.remove_prefix(1);
    if (t.empty()) continue;
    auto tag = detail::to_lower(t);
    if (std::find(out.begin(), out.end(), tag) == out.end()) out.push_back(std::move(tag));
  }
  return out;
}

QuarterKey quarter_of(Timestamp t) {
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(t)};
  const unsigned month = static_cast<unsigned>(ymd.month());
  return QuarterKey{static_cast<int>(ymd.year()), static_cast<int>((month - 1) / 3 + 1)};
}

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  int year, month, day, hour, minute, second;
  if (!read_digits(s, 0, 4, year) || s.size() < 19 || s[4] != '-' ||
      !read_digits(s, 5, 2, month) || s[7] != '-' || !read_digits(s, 8, 2, day) ||
      (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || !read_digits(s, 11, 2, hour) ||
      s[13] != ':' || !read_digits(s, 14, 2, minute) || s[16] != ':' ||
      !read_digits(s, 17, 2, second)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start) return std::nullopt;
  }
  int offset_minutes = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int oh, om;
    if (!read_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_digits(s, pos + 4, 2, om) || oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset_minutes = (s[pos] == '+' ? 1 : -1) * (oh * 60 + om);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) return std::nullopt;
  auto t = sys_days{ymd} + hours{hour} + minutes{minute} + seconds{std::min(second, 59)};
  return Timestamp{t - minutes{offset_minutes}};
}

std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace {

// Shortest text that parses back to the same double.
std::string format_exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void write_companies_csv(const CompanyTable& companies, const std::filesystem::path& path) {
  std::string out = "company_id,name,ticker,sector,esg_risk\n";
  for (const auto& c : companies) {
    out += detail::csv_escape(c.company_id) + ',' + detail::csv_escape(c.name) + ',' +
           detail::csv_escape(c.ticker) + ',' + detail::csv_escape(sector_name(c.sector)) + ',' +
           (c.esg_risk ? format_exact(*c.esg_risk) : std::string()) + '\n';
  }
  detail::write_file(path, out);
}

void write_posts_jsonl(const std::vector<Post>& posts, const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : posts) {
    json obj = {
        {"post_id", p.post_id},
        {"company_id", p.company_id},
        {"created_at", format_rfc3339(p.created_at)},
        {"text", p.text},
        {"like_count", p.like_count},
        {"retweet_count", p.retweet_count},
        {"reply_count", p.reply_count},
        {"quote_count", p.quote_count},
        {"media_ids", p.media_ids},
        {"hashtags", p.hashtags},
    };
    out += obj.dump();
    out += '\n';
  }
  detail::write_file(path, out);
}

void save_store(const CorpusStore& store, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_companies_csv(store.companies(), dir / "companies.csv");
  write_posts_jsonl(store.posts(), dir / "posts.jsonl");
}

CorpusStore load_store(const std::filesystem::path& dir) {
  auto companies = load_companies(dir / "companies.csv");
  return load_posts(dir / "posts.jsonl", companies);
}

}  // namespace themescope
