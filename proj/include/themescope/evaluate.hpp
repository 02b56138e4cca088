#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "themescope/corpus.hpp"
#include "themescope/sdg.hpp"

namespace themescope {

class AnnotationMatrix;

/// Lowercase hashtag -> goal number.
class HashtagMap {
 public:
  HashtagMap() = default;
  /// Parses `{ "sdg13": 13, ... }`. Keys are lowercased with '#' stripped;
  /// throws ValidationError on values outside 1..17 or conflicting keys.
  static HashtagMap from_json(std::string_view text);
  static HashtagMap load(const std::filesystem::path& path);
  static const HashtagMap& builtin();

  std::optional<int> lookup(std::string_view hashtag) const;
  std::size_t size() const { return map_.size(); }
  const std::map<std::string, int, std::less<>>& entries() const { return map_; }

 private:
  std::map<std::string, int, std::less<>> map_;
};

/// Label implied by the hashtags when they point at exactly one goal.
std::optional<SdgLabel> hashtag_ground_truth(std::span<const std::string> hashtags,
                                             const HashtagMap& map);

inline std::optional<SdgLabel> hashtag_ground_truth(const Post& post, const HashtagMap& map) {
  return hashtag_ground_truth(post.hashtags, map);
}

/// Percentage of positions with identical labels (None counts as a class).
double agreement(std::span<const SdgLabel> a, std::span<const SdgLabel> b);

/// Unweighted Cohen's kappa over the 18 label classes. Returns 1 when the
/// observed agreement is perfect, including the single-shared-class case.
double cohens_kappa(std::span<const SdgLabel> a, std::span<const SdgLabel> b);

using ContingencyTable = std::array<std::array<std::uint64_t, kLabelCount>, kLabelCount>;

/// table[i][j]: positions where a has index i and b has index j.
ContingencyTable contingency_table(std::span<const SdgLabel> a, std::span<const SdgLabel> b);

inline constexpr std::string_view kMajorityVoteRow = "majority_vote";

struct EvalRow {
  std::string annotator;
  double agreement_pct = 0.0;
  double kappa = 0.0;
  std::size_t n = 0;
};

struct EvalReport {
  std::vector<EvalRow> annotators;   // individual annotators, matrix order
  std::optional<EvalRow> aggregate;  // majority vote, when the matrix has one
  /// Debug artifact: aggregate (or first annotator) against the hashtag truth.
  ContingencyTable confusion{};
};

/// Scores every annotator column, and the aggregated column when present,
/// against hashtag ground truth. Only posts with an unambiguous hashtag label
/// take part. Throws ValidationError when no such post exists.
EvalReport run_evaluation(const AnnotationMatrix& matrix, const CorpusStore& store,
                          const HashtagMap& map);

/// Highest kappa; ties go to higher agreement, then the smaller id.
std::string select_tie_breaker(const EvalReport& report);

/// `annotator,agreement_pct,kappa,n` rows, optionally followed by a
/// `# tie_breaker=<id>` footer line.
std::string eval_report_csv(const EvalReport& report,
                            const std::optional<std::string>& tie_breaker = std::nullopt);

std::string confusion_csv(const ContingencyTable& table);

}  // namespace themescope
