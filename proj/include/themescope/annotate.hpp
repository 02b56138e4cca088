#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "themescope/assets.hpp"
#include "themescope/backend.hpp"
#include "themescope/corpus.hpp"
#include "themescope/sdg.hpp"

namespace themescope {

struct SdgPrompt {
  std::string system_text;
  std::string user_text;
};

/// System text is the classification prompt verbatim; the user text is the
/// post text unchanged. Throws ValidationError on blank text.
SdgPrompt build_sdg_prompt(std::string_view text,
                           const PromptAssets& prompts = PromptAssets::builtin());

/// Accepts "13", "SDG13", "sdg 13", "None" (surrounding whitespace and
/// trailing punctuation ignored). Anything else is None.
SdgLabel parse_sdg_response(std::string_view raw);

/// Plurality label; any tie for the top count resolves to
/// labels[tie_breaker_index].
SdgLabel majority_vote(std::span<const SdgLabel> labels, std::size_t tie_breaker_index);

/// Per-post labels from each annotator plus the optional aggregated vote.
/// Rows are ordered by post_id.
class AnnotationMatrix {
 public:
  AnnotationMatrix() = default;
  AnnotationMatrix(std::vector<std::string> annotator_ids, std::vector<std::string> post_ids);

  const std::vector<std::string>& annotator_ids() const { return annotator_ids_; }
  const std::vector<std::string>& post_ids() const { return post_ids_; }
  std::size_t rows() const { return post_ids_.size(); }
  std::size_t cols() const { return annotator_ids_.size(); }

  SdgLabel at(std::size_t row, std::size_t col) const { return labels_[row * cols() + col]; }
  void set(std::size_t row, std::size_t col, SdgLabel label) { labels_[row * cols() + col] = label; }
  std::span<const SdgLabel> row(std::size_t r) const {
    return {labels_.data() + r * cols(), cols()};
  }
  std::vector<SdgLabel> column(std::size_t col) const;

  std::optional<std::size_t> row_of(std::string_view post_id) const;
  std::optional<std::size_t> column_of(std::string_view annotator_id) const;

  bool has_aggregate() const { return aggregated_.has_value(); }
  const std::vector<SdgLabel>& aggregated() const { return *aggregated_; }
  /// Fills the aggregated column with majority_vote over each row.
  void aggregate(std::size_t tie_breaker_index);
  void set_aggregated(std::vector<SdgLabel> labels);

  /// post_id -> aggregated label.
  std::map<std::string, SdgLabel> aggregated_map() const;

  friend bool operator==(const AnnotationMatrix&, const AnnotationMatrix&) = default;

 private:
  std::vector<std::string> annotator_ids_;
  std::vector<std::string> post_ids_;
  std::vector<SdgLabel> labels_;
  std::optional<std::vector<SdgLabel>> aggregated_;
};

/// A configured backend together with the transport that serves it.
struct Annotator {
  BackendConfig config;
  std::shared_ptr<ChatBackend> backend;
};

struct AnnotationDiagnostic {
  std::string post_id;
  std::string annotator_id;
  std::string message;

  friend bool operator==(const AnnotationDiagnostic&, const AnnotationDiagnostic&) = default;
};

struct AnnotateOptions {
  /// Append-only progress log; completed (post, annotator) pairs found here
  /// are not queried again. Removed after a successful run.
  std::optional<std::filesystem::path> checkpoint;
  std::size_t checkpoint_every = 1000;
  bool keep_checkpoint = false;
  const PromptAssets* prompts = nullptr;  // built-in when null
  SleepFn sleep;                          // backoff sleep override
};

struct AnnotateResult {
  AnnotationMatrix matrix;
  std::vector<AnnotationDiagnostic> diagnostics;  // sorted by (post, annotator)
  std::size_t queries = 0;                        // requests issued in this run
};

/// Labels every post with every annotator. Each annotator keeps up to
/// max_in_flight requests outstanding. A post that still fails after retries
/// gets None for that annotator plus a diagnostic.
AnnotateResult annotate_corpus(const CorpusStore& store, std::span<const Annotator> annotators,
                               const AnnotateOptions& options = {});

/// annotations.jsonl: {post_id, label, votes: [{annotator, label}]} per row.
/// Requires an aggregated column.
void write_annotations_jsonl(const AnnotationMatrix& matrix, const std::filesystem::path& path);
AnnotationMatrix read_annotations_jsonl(const std::filesystem::path& path);

void write_diagnostics_jsonl(std::span<const AnnotationDiagnostic> diagnostics,
                             const std::filesystem::path& path);

}  // namespace themescope
