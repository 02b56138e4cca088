#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "themescope/backend.hpp"
#include "themescope/cluster_stats.hpp"
#include "themescope/clustering.hpp"
#include "themescope/corpus.hpp"
#include "themescope/phash.hpp"
#include "themescope/report.hpp"

namespace themescope {

inline constexpr std::string_view kAutoTieBreaker = "auto";

struct PathsConfig {
  std::filesystem::path companies;
  std::filesystem::path posts;
  std::filesystem::path output = "out";
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> embedding_ids;
  /// Directory holding <image_id>.png / .jpg files; dedup and summaries
  /// are skipped when unset.
  std::optional<std::filesystem::path> images;
  std::optional<std::filesystem::path> sdg_prompt;
  std::optional<std::filesystem::path> vlm_prompt;
  std::optional<std::filesystem::path> hashtags;
};

struct RunConfig {
  PathsConfig paths;
  std::uint64_t seed = 0;
  /// Worker budget for clustering and backend concurrency; 0 means all cores.
  unsigned workers = 0;
  MalformedLinePolicy on_malformed = MalformedLinePolicy::Abort;

  std::vector<BackendConfig> backends;
  std::string tie_breaker{kAutoTieBreaker};
  std::size_t checkpoint_every = 1000;
  bool evaluation_enabled = true;

  std::optional<BackendConfig> vlm;

  ClusterParams cluster;
  int dedup_hamming = kDefaultDedupThreshold;
  std::size_t sample_size = 9;
  RiskTestUnit risk_unit = RiskTestUnit::Image;
  /// Retention-test level; plates.significance always mirrors it.
  double significance = 0.05;

  PlateFilters plates;

  /// Throws ValidationError naming the offending key.
  void validate() const;
};

/// Parses TOML text. Relative paths are resolved against `base_dir`.
/// Throws ValidationError for bad syntax, unknown keys or out-of-range values.
RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir);

/// Reads a TOML file; relative paths resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace themescope
