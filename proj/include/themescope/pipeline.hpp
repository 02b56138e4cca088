#pragma once

#include <filesystem>
#include <ostream>

#include "themescope/config.hpp"

namespace themescope {

struct RunOptions {
  /// Replace every configured backend with the deterministic mocks.
  bool mock_backends = false;
  /// Progress lines; nullptr silences them.
  std::ostream* log = nullptr;
};

/// Artifact locations under the configured output directory.
struct OutputLayout {
  explicit OutputLayout(std::filesystem::path root);

  std::filesystem::path root;
  std::filesystem::path corpus_dir() const { return root / "corpus"; }
  std::filesystem::path ingest_report() const { return root / "ingest_report.json"; }
  std::filesystem::path annotations() const { return root / "annotations.jsonl"; }
  std::filesystem::path diagnostics() const { return root / "annotation_diagnostics.jsonl"; }
  std::filesystem::path checkpoint() const { return root / "annotate.checkpoint.jsonl"; }
  std::filesystem::path eval() const { return root / "eval.csv"; }
  std::filesystem::path confusion() const { return root / "confusion.csv"; }
  std::filesystem::path dedup() const { return root / "dedup.json"; }
  std::filesystem::path clusters() const { return root / "clusters.jsonl"; }
  std::filesystem::path cluster_stats() const { return root / "cluster_stats.jsonl"; }
  std::filesystem::path summaries() const { return root / "summaries.jsonl"; }
  std::filesystem::path sector_volumes() const { return root / "sector_volumes.csv"; }
  std::filesystem::path sdg_distribution() const { return root / "sdg_distribution.csv"; }
  std::filesystem::path temporal() const { return root / "temporal.csv"; }
  std::filesystem::path correlations() const { return root / "correlations.csv"; }
  std::filesystem::path engagement() const { return root / "engagement.csv"; }
  std::filesystem::path plates() const { return root / "plates.json"; }
};

/// Each stage reads its predecessors' artifacts from the output directory
/// and throws ValidationError naming any that are missing.
void cmd_ingest(const RunConfig& config, const RunOptions& options = {});
void cmd_annotate(const RunConfig& config, const RunOptions& options = {});
void cmd_evaluate(const RunConfig& config, const RunOptions& options = {});
void cmd_cluster(const RunConfig& config, const RunOptions& options = {});
void cmd_report(const RunConfig& config, const RunOptions& options = {});
/// ingest, annotate, evaluate (when enabled), cluster, report.
void cmd_run_all(const RunConfig& config, const RunOptions& options = {});

}  // namespace themescope
