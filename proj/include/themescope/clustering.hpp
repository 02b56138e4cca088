#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "themescope/backend.hpp"
#include "themescope/embeddings.hpp"

namespace themescope {

struct Cluster {
  int cluster_id = 0;
  std::size_t seed_row = 0;
  std::string seed_image;
  std::vector<std::size_t> member_rows;  // ascending
  std::vector<std::string> members;      // image ids aligned with member_rows

  std::size_t size() const { return member_rows.size(); }
  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct ClusterParams {
  double tau = 0.75;
  std::size_t min_size = 50;
  std::size_t block = 1024;
  /// Threads for the similarity pass; 0 means hardware concurrency.
  unsigned workers = 1;
};

/// Threshold graph clustering. Every point i with at least min_size rows
/// at similarity >= tau (itself included) seeds a candidate; candidates are
/// visited largest first (ties by seed row), each one losing rows already
/// taken, and kept only if its seed is still free and at least min_size rows
/// remain. Unassigned rows are noise. The output does not depend on block
/// size or worker count.
std::vector<Cluster> threshold_cluster(const EmbeddingMatrix& matrix, const ClusterParams& params = {});

std::set<std::string> cluster_company_set(const Cluster& cluster, const EmbeddingMatrix& matrix);

/// Takes one image per company per round, companies in ascending id order,
/// each company's images shuffled once by a generator seeded with `seed`.
std::vector<std::string> round_robin_sample(const Cluster& cluster, const EmbeddingMatrix& matrix,
                                            std::size_t n, std::uint64_t seed);

struct ClusterSummary {
  std::string summary_line;
  std::vector<std::string> concepts;
  std::vector<std::string> sample_ids;
  bool available = true;
};

/// First non-empty line becomes the summary, "- " lines after it the
/// concepts. When the reply has no usable first line the whole text, joined
/// onto one line, is the summary and concepts stay empty.
ClusterSummary parse_summary_response(std::string_view raw);

/// Sends the summary prompt with the readable images attached. Backend
/// failure yields available = false rather than an exception.
ClusterSummary summarize_cluster(std::span<const std::filesystem::path> sample_paths,
                                 ChatBackend& backend, const BackendConfig& config,
                                 std::string_view prompt, const QueryContext& context = {});

void write_clusters_jsonl(const std::vector<Cluster>& clusters, const std::vector<std::string>& sectors,
                          const std::filesystem::path& path);

}  // namespace themescope
