#include "themescope/clustering.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <random>
#include <thread>

#include <json.hpp>

#include "detail.hpp"
#include "themescope/assets.hpp"
#include "themescope/error.hpp"

namespace themescope {

namespace {

struct Candidate {
  std::size_t seed = 0;
  std::vector<std::size_t> neighbors;  // ascending
};

unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Neighbourhood of every row with at least min_size members, computed over
// row blocks claimed from a shared counter. Each row's list depends only on
// the row, so the merged result is independent of scheduling.
std::vector<Candidate> collect_candidates(const EmbeddingMatrix& m, const ClusterParams& p) {
  const std::size_t n = m.rows();
  const std::size_t blocks = (n + p.block - 1) / p.block;
  std::vector<std::vector<Candidate>> per_block(blocks);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t b = next++; b < blocks; b = next++) {
      const std::size_t lo = b * p.block;
      const std::size_t hi = std::min(n, lo + p.block);
      for (std::size_t i = lo; i < hi; ++i) {
        std::vector<std::size_t> hood;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i || m.similarity(i, j) >= p.tau) hood.push_back(j);
        }
        if (hood.size() >= p.min_size) per_block[b].push_back({i, std::move(hood)});
      }
    }
  };

  const unsigned workers = std::min<std::size_t>(resolve_workers(p.workers), std::max<std::size_t>(blocks, 1));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<Candidate> out;
  for (auto& block : per_block) {
    for (auto& c : block) out.push_back(std::move(c));
  }
  return out;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased for any bound.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

std::string mime_of(std::string_view bytes) {
  if (bytes.size() >= 4 && bytes.substr(0, 4) == "\x89PNG") return "image/png";
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xFF\xD8\xFF") return "image/jpeg";
  return {};
}

}  // namespace

std::vector<Cluster> threshold_cluster(const EmbeddingMatrix& matrix, const ClusterParams& params) {
  if (matrix.empty()) throw ValidationError("cannot cluster an empty embedding matrix");
  if (!(params.tau > 0.0 && params.tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  if (params.min_size < 2) throw ValidationError("min_size must be at least 2");
  if (params.block == 0) throw ValidationError("block size must be positive");

  auto candidates = collect_candidates(matrix, params);
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.neighbors.size() != b.neighbors.size()) return a.neighbors.size() > b.neighbors.size();
    return a.seed < b.seed;
  });

  std::vector<char> assigned(matrix.rows(), 0);
  std::vector<Cluster> clusters;
  for (const auto& cand : candidates) {
    if (assigned[cand.seed]) continue;
    std::vector<std::size_t> residual;
    for (auto j : cand.neighbors) {
      if (!assigned[j]) residual.push_back(j);
    }
    if (residual.size() < params.min_size) continue;
    Cluster c;
    c.cluster_id = static_cast<int>(clusters.size());
    c.seed_row = cand.seed;
    c.seed_image = matrix.image_id(cand.seed);
    for (auto j : residual) {
      assigned[j] = 1;
      c.members.push_back(matrix.image_id(j));
    }
    c.member_rows = std::move(residual);
    clusters.push_back(std::move(c));
  }
  return clusters;
}

std::set<std::string> cluster_company_set(const Cluster& cluster, const EmbeddingMatrix& matrix) {
  std::set<std::string> out;
  for (auto r : cluster.member_rows) {
    if (r >= matrix.rows()) {
      throw ValidationError("cluster " + std::to_string(cluster.cluster_id) + " references row " +
                            std::to_string(r) + " outside the matrix");
    }
    out.insert(matrix.company_of(r));
  }
  return out;
}

std::vector<std::string> round_robin_sample(const Cluster& cluster, const EmbeddingMatrix& matrix,
                                            std::size_t n, std::uint64_t seed) {
  if (cluster.member_rows.empty()) throw ValidationError("cannot sample an empty cluster");
  if (n == 0) throw ValidationError("sample size must be at least 1");

  std::map<std::string, std::vector<std::string>> pools;
  for (auto r : cluster.member_rows) pools[matrix.company_of(r)].push_back(matrix.image_id(r));

  std::mt19937_64 rng(seed);
  for (auto& [company, pool] : pools) {
    std::sort(pool.begin(), pool.end());
    for (std::size_t i = pool.size(); i > 1; --i) {
      std::swap(pool[i - 1], pool[bounded(rng, i)]);
    }
  }

  std::vector<std::string> sample;
  for (std::size_t round = 0; sample.size() < n; ++round) {
    bool took = false;
    for (const auto& [company, pool] : pools) {
      if (round >= pool.size()) continue;
      sample.push_back(pool[round]);
      took = true;
      if (sample.size() == n) break;
    }
    if (!took) break;
  }
  return sample;
}

ClusterSummary parse_summary_response(std::string_view raw) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= raw.size()) {
    const auto end = raw.find('\n', start);
    const auto line = detail::trim(raw.substr(start, end == std::string_view::npos ? raw.npos : end - start));
    if (!line.empty()) lines.push_back(line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }

  ClusterSummary out;
  if (!lines.empty() && !lines.front().starts_with("- ")) {
    out.summary_line = std::string(lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (!lines[i].starts_with("- ")) continue;
      auto concept_text = detail::trim(lines[i].substr(2));
      if (!concept_text.empty()) out.concepts.emplace_back(concept_text);
    }
    return out;
  }
  for (auto line : lines) {
    if (!out.summary_line.empty()) out.summary_line += ' ';
    out.summary_line += line;
  }
  return out;
}

ClusterSummary summarize_cluster(std::span<const std::filesystem::path> sample_paths,
                                 ChatBackend& backend, const BackendConfig& config,
                                 std::string_view prompt, const QueryContext& context) {
  ChatMessage message{"user", std::string(prompt), {}};
  for (const auto& path : sample_paths) {
    std::string bytes;
    try {
      bytes = detail::read_file(path);
    } catch (const IoError&) {
      continue;
    }
    auto mime = mime_of(bytes);
    if (mime.empty()) continue;
    message.images.push_back({std::move(mime), base64_encode(bytes)});
  }
  if (message.images.empty()) {
    throw ValidationError("cluster " + context.post_id + " has no readable sample image");
  }

  ChatRequest request{config.model_name, {std::move(message)}, config.temperature, config.max_tokens};
  std::string raw;
  try {
    raw = query_with_retry(backend, config, request, context);
  } catch (const BackendError&) {
    ClusterSummary unavailable;
    unavailable.available = false;
    return unavailable;
  }
  return parse_summary_response(raw);
}

void write_clusters_jsonl(const std::vector<Cluster>& clusters, const std::vector<std::string>& sectors,
                          const std::filesystem::path& path) {
  if (sectors.size() != clusters.size()) throw ValidationError("one sector per cluster is required");
  std::string out;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    nlohmann::ordered_json j;
    j["cluster_id"] = clusters[i].cluster_id;
    j["seed_image"] = clusters[i].seed_image;
    j["sector"] = sectors[i];
    auto members = clusters[i].members;
    std::sort(members.begin(), members.end());
    j["members"] = members;
    out += j.dump() + "\n";
  }
  detail::write_file(path, out);
}

}  // namespace themescope
