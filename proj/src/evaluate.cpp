#include "themescope/evaluate.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "detail.hpp"
#include "themescope/annotate.hpp"
#include "themescope/assets.hpp"
#include "themescope/error.hpp"

namespace themescope {

HashtagMap HashtagMap::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("hashtag map is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("hashtag map must be a JSON object");
  HashtagMap out;
  for (const auto& [key, value] : doc.items()) {
    std::string_view k = key;
    while (!k.empty() && k.front() == '#') k.remove_prefix(1);
    if (k.empty()) throw ValidationError("hashtag map has an empty key");
    if (!value.is_number_integer()) throw ValidationError("hashtag '" + key + "' has a non-integer goal");
    const int goal = value.get<int>();
    if (goal < 1 || goal > kGoalCount) {
      throw ValidationError("hashtag '" + key + "' maps outside 1..17");
    }
    auto tag = detail::to_lower(k);
    auto [it, inserted] = out.map_.emplace(tag, goal);
    if (!inserted && it->second != goal) {
      throw ValidationError("hashtag '" + tag + "' maps to two goals");
    }
  }
  return out;
}

HashtagMap HashtagMap::load(const std::filesystem::path& path) {
  return from_json(detail::read_file(path));
}

const HashtagMap& HashtagMap::builtin() {
  static const HashtagMap map = from_json(builtin_hashtag_json());
  return map;
}

std::optional<int> HashtagMap::lookup(std::string_view hashtag) const {
  auto it = map_.find(hashtag);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::optional<SdgLabel> hashtag_ground_truth(std::span<const std::string> hashtags,
                                             const HashtagMap& map) {
  std::optional<int> goal;
  for (const auto& tag : hashtags) {
    auto g = map.lookup(tag);
    if (!g) continue;
    if (goal && *goal != *g) return std::nullopt;
    goal = g;
  }
  if (!goal) return std::nullopt;
  return SdgLabel::goal(*goal);
}

namespace {

void check_pair(std::span<const SdgLabel> a, std::span<const SdgLabel> b) {
  if (a.size() != b.size()) throw ValidationError("label lists differ in length");
  if (a.empty()) throw ValidationError("label lists are empty");
}

}  // namespace

double agreement(std::span<const SdgLabel> a, std::span<const SdgLabel> b) {
  check_pair(a, b);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return 100.0 * static_cast<double>(same) / static_cast<double>(a.size());
}

ContingencyTable contingency_table(std::span<const SdgLabel> a, std::span<const SdgLabel> b) {
  check_pair(a, b);
  ContingencyTable t{};
  for (std::size_t i = 0; i < a.size(); ++i) ++t[a[i].index()][b[i].index()];
  return t;
}

double cohens_kappa(std::span<const SdgLabel> a, std::span<const SdgLabel> b) {
  check_pair(a, b);
  const double n = static_cast<double>(a.size());
  std::array<double, kLabelCount> ca{}, cb{};
  double same = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i].index()] += 1.0;
    cb[b[i].index()] += 1.0;
    if (a[i] == b[i]) same += 1.0;
  }
  if (same == n) return 1.0;
  const double p_o = same / n;
  // Sum kept symmetric in (a, b) so kappa(a, b) == kappa(b, a) bit for bit.
  double p_e = 0.0;
  for (int k = 0; k < kLabelCount; ++k) p_e += (ca[k] * cb[k]) / (n * n);
  return (p_o - p_e) / (1.0 - p_e);
}

EvalReport run_evaluation(const AnnotationMatrix& matrix, const CorpusStore& store,
                          const HashtagMap& map) {
  std::vector<std::size_t> rows;
  std::vector<SdgLabel> truth;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const Post* post = store.find_post(matrix.post_ids()[r]);
    if (post == nullptr) continue;
    auto label = hashtag_ground_truth(*post, map);
    if (!label) continue;
    rows.push_back(r);
    truth.push_back(*label);
  }
  if (rows.empty()) {
    throw ValidationError("no posts with unambiguous SDG hashtags to evaluate against");
  }

  auto score = [&](const std::string& name, const std::vector<SdgLabel>& predicted) {
    return EvalRow{name, agreement(predicted, truth), cohens_kappa(predicted, truth), truth.size()};
  };

  EvalReport report;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    std::vector<SdgLabel> predicted;
    predicted.reserve(rows.size());
    for (auto r : rows) predicted.push_back(matrix.at(r, c));
    report.annotators.push_back(score(matrix.annotator_ids()[c], predicted));
    if (c == 0 && !matrix.has_aggregate()) report.confusion = contingency_table(predicted, truth);
  }
  if (matrix.has_aggregate()) {
    std::vector<SdgLabel> predicted;
    for (auto r : rows) predicted.push_back(matrix.aggregated()[r]);
    report.aggregate = score(std::string(kMajorityVoteRow), predicted);
    report.confusion = contingency_table(predicted, truth);
  }
  return report;
}

std::string select_tie_breaker(const EvalReport& report) {
  if (report.annotators.empty()) throw ValidationError("evaluation report has no annotators");
  const auto best = std::min_element(
      report.annotators.begin(), report.annotators.end(), [](const EvalRow& a, const EvalRow& b) {
        if (a.kappa != b.kappa) return a.kappa > b.kappa;
        if (a.agreement_pct != b.agreement_pct) return a.agreement_pct > b.agreement_pct;
        return a.annotator < b.annotator;
      });
  return best->annotator;
}

std::string eval_report_csv(const EvalReport& report,
                            const std::optional<std::string>& tie_breaker) {
  std::string out = "annotator,agreement_pct,kappa,n\n";
  auto emit = [&](const EvalRow& row) {
    out += detail::csv_escape(row.annotator) + ',' + detail::format_g6(row.agreement_pct) + ',' +
           detail::format_g6(row.kappa) + ',' + std::to_string(row.n) + '\n';
  };
  for (const auto& row : report.annotators) emit(row);
  if (report.aggregate) emit(*report.aggregate);
  if (tie_breaker) out += "# tie_breaker=" + *tie_breaker + '\n';
  return out;
}

std::string confusion_csv(const ContingencyTable& table) {
  std::string out = "predicted\\truth";
  for (int j = 0; j < kLabelCount; ++j) out += ',' + SdgLabel::from_index(j).to_string();
  out += '\n';
  for (int i = 0; i < kLabelCount; ++i) {
    out += SdgLabel::from_index(i).to_string();
    for (int j = 0; j < kLabelCount; ++j) out += ',' + std::to_string(table[i][j]);
    out += '\n';
  }
  return out;
}

}  // namespace themescope
