#include "themescope/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "detail.hpp"
#include "themescope/annotate.hpp"
#include "themescope/assets.hpp"
#include "themescope/embeddings.hpp"
#include "themescope/error.hpp"
#include "themescope/evaluate.hpp"

namespace themescope {

namespace {

namespace fs = std::filesystem;

void log_line(const RunOptions& options, const std::string& line) {
  if (options.log) *options.log << line << '\n';
}

void require(const fs::path& path, std::string_view hint) {
  if (!fs::exists(path)) {
    throw ValidationError("missing " + path.string() + " (" + std::string(hint) + ")");
  }
}

unsigned worker_budget(const RunConfig& config) {
  if (config.workers != 0) return config.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

HashtagMap hashtag_map(const RunConfig& config) {
  return config.paths.hashtags ? HashtagMap::load(*config.paths.hashtags) : HashtagMap::builtin();
}

PromptAssets prompt_assets(const RunConfig& config) {
  return PromptAssets::load(config.paths.sdg_prompt, config.paths.vlm_prompt);
}

std::optional<std::string> api_key_from_env() {
  const char* key = std::getenv("THEMESCOPE_API_KEY");
  if (key == nullptr || *key == '\0') return std::nullopt;
  return std::string(key);
}

BackendConfig effective(BackendConfig b, const RunConfig& config) {
  b.max_in_flight = std::min<int>(b.max_in_flight, static_cast<int>(worker_budget(config)));
  if (auto key = api_key_from_env()) b.api_key = std::move(key);
  return b;
}

CorpusStore load_annotated_store(const RunConfig& config, AnnotationMatrix* matrix_out = nullptr) {
  const OutputLayout out(config.paths.output);
  require(out.corpus_dir() / "posts.jsonl", "run `themescope ingest` first");
  require(out.annotations(), "run `themescope annotate` first");
  auto store = load_store(out.corpus_dir());
  auto matrix = read_annotations_jsonl(out.annotations());
  if (!matrix.has_aggregate()) throw ValidationError(out.annotations().string() + " has no aggregated labels");
  auto labels = matrix.aggregated_map();
  if (labels.size() != store.size()) {
    throw ValidationError(out.annotations().string() + " covers " + std::to_string(labels.size()) +
                          " posts but the corpus holds " + std::to_string(store.size()) +
                          " (re-run `themescope annotate`)");
  }
  store.attach_annotations(std::move(labels));
  if (matrix_out) *matrix_out = std::move(matrix);
  return store;
}

std::optional<fs::path> image_file(const fs::path& dir, const std::string& image_id) {
  for (const char* ext : {".png", ".jpg", ".jpeg"}) {
    auto p = dir / (image_id + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

// pHash of every image with a file on disk, computed by a small worker pool.
std::map<std::string, std::uint64_t> hash_images(const std::vector<std::string>& ids, const fs::path& dir,
                                                 unsigned workers) {
  std::vector<std::optional<std::uint64_t>> hashes(ids.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<std::string> first_error;
  auto work = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      auto path = image_file(dir, ids[i]);
      if (!path) continue;
      try {
        hashes[i] = phash64_file(*path);
      } catch (const Error& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = e.what();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (first_error) throw ValidationError(*first_error);
  std::map<std::string, std::uint64_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (hashes[i]) out.emplace(ids[i], *hashes[i]);
  }
  return out;
}

std::uint64_t sample_seed(std::uint64_t seed, int cluster_id) {
  return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(cluster_id + 1));
}

}  // namespace

OutputLayout::OutputLayout(std::filesystem::path r) : root(std::move(r)) {}

void cmd_ingest(const RunConfig& config, const RunOptions& options) {
  require(config.paths.companies, "paths.companies");
  require(config.paths.posts, "paths.posts");
  const OutputLayout out(config.paths.output);
  auto companies = load_companies(config.paths.companies);
  auto store = load_posts(config.paths.posts, companies, {config.on_malformed});
  fs::create_directories(out.root);
  save_store(store, out.corpus_dir());

  const auto& report = store.load_report();
  nlohmann::ordered_json j;
  j["companies"] = store.companies().size();
  j["posts"] = report.loaded;
  j["orphans"] = report.orphans;
  j["malformed"] = report.malformed;
  j["duplicates"] = report.duplicates;
  j["warnings"] = report.warnings;
  detail::write_file(out.ingest_report(), j.dump(2) + "\n");
  log_line(options, "ingest: " + std::to_string(store.companies().size()) + " companies, " +
                        std::to_string(report.loaded) + " posts (" + std::to_string(report.orphans) +
                        " orphans skipped)");
}

void cmd_annotate(const RunConfig& config, const RunOptions& options) {
  const OutputLayout out(config.paths.output);
  require(out.corpus_dir() / "posts.jsonl", "run `themescope ingest` first");
  if (config.backends.empty()) throw ValidationError("config: no [[backends]] configured");
  auto store = load_store(out.corpus_dir());
  const auto hashtags = hashtag_map(config);
  const auto prompts = prompt_assets(config);

  std::vector<Annotator> annotators;
  for (const auto& b : config.backends) {
    auto cfg = effective(b, config);
    std::shared_ptr<ChatBackend> backend;
    if (options.mock_backends) {
      backend = std::make_shared<MockSdgBackend>(hashtags);
    } else {
      backend = std::make_shared<HttpChatBackend>(cfg);
    }
    annotators.push_back({std::move(cfg), std::move(backend)});
  }

  AnnotateOptions opts;
  opts.checkpoint = out.checkpoint();
  opts.checkpoint_every = config.checkpoint_every;
  opts.prompts = &prompts;
  auto result = annotate_corpus(store, annotators, opts);

  std::string tie_breaker = config.tie_breaker;
  if (tie_breaker == kAutoTieBreaker) {
    tie_breaker = select_tie_breaker(run_evaluation(result.matrix, store, hashtags));
  }
  result.matrix.aggregate(*result.matrix.column_of(tie_breaker));
  write_annotations_jsonl(result.matrix, out.annotations());
  write_diagnostics_jsonl(result.diagnostics, out.diagnostics());
  log_line(options, "annotate: " + std::to_string(result.matrix.rows()) + " posts x " +
                        std::to_string(result.matrix.cols()) + " annotators, " +
                        std::to_string(result.diagnostics.size()) + " failures, tie-breaker " + tie_breaker);
}

void cmd_evaluate(const RunConfig& config, const RunOptions& options) {
  const OutputLayout out(config.paths.output);
  AnnotationMatrix matrix;
  const auto store = load_annotated_store(config, &matrix);
  const auto report = run_evaluation(matrix, store, hashtag_map(config));
  const std::string tie_breaker =
      config.tie_breaker == kAutoTieBreaker ? select_tie_breaker(report) : config.tie_breaker;
  detail::write_file(out.eval(), eval_report_csv(report, tie_breaker));
  detail::write_file(out.confusion(), confusion_csv(report.confusion));
  std::string line = "evaluate: n=" + std::to_string(report.annotators.front().n);
  if (report.aggregate) line += ", ensemble agreement " + detail::format_g6(report.aggregate->agreement_pct) + "%";
  log_line(options, line + ", tie-breaker " + tie_breaker);
}

void cmd_cluster(const RunConfig& config, const RunOptions& options) {
  const OutputLayout out(config.paths.output);
  if (!config.paths.embeddings || !config.paths.embedding_ids) {
    throw ValidationError("config: paths.embeddings and paths.embedding_ids are required for cluster");
  }
  require(*config.paths.embeddings, "paths.embeddings");
  require(*config.paths.embedding_ids, "paths.embedding_ids");
  const auto store = load_annotated_store(config);
  const auto matrix = load_embeddings(*config.paths.embeddings, *config.paths.embedding_ids, store);
  const unsigned workers = worker_budget(config);

  // Global near-duplicate removal before sector slicing.
  std::set<std::string> discarded;
  std::size_t hashed = 0;
  if (config.paths.images) {
    const auto hashes = hash_images(matrix.image_ids(), *config.paths.images, workers);
    hashed = hashes.size();
    discarded = dedup(hashes, config.dedup_hamming).discarded;
  }
  nlohmann::ordered_json dedup_json;
  dedup_json["threshold"] = config.dedup_hamming;
  dedup_json["hashed"] = hashed;
  dedup_json["discarded"] = discarded;
  detail::write_file(out.dedup(), dedup_json.dump(2) + "\n");

  const auto post_of = media_index(store);
  std::map<Sector, std::vector<std::size_t>> rows_by_sector;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    if (discarded.contains(matrix.image_id(r))) continue;
    const Post& post = store.posts()[post_of.at(matrix.image_id(r))];
    if (store.label_of(post.post_id).is_none()) continue;
    rows_by_sector[store.companies().at(post.company_id).sector].push_back(r);
  }

  std::unique_ptr<ChatBackend> vlm_backend;
  BackendConfig vlm_config;
  if (options.mock_backends) {
    vlm_backend = std::make_unique<MockVisionBackend>();
    vlm_config = config.vlm ? *config.vlm : BackendConfig{};
    if (!config.vlm) {
      vlm_config.annotator_id = "mock-vlm";
      vlm_config.max_tokens = 256;
    }
  } else if (config.vlm) {
    vlm_config = effective(*config.vlm, config);
    vlm_backend = std::make_unique<HttpChatBackend>(vlm_config);
  }
  const auto prompts = prompt_assets(config);

  ClusterParams params = config.cluster;
  params.workers = workers;
  ClusterStatsParams stat_params{config.risk_unit, config.significance};

  std::vector<Cluster> clusters;
  std::vector<std::string> cluster_sectors;
  std::vector<ClusterStats> all_stats;
  std::vector<SummaryRecord> summaries;
  for (const auto& [sector, rows] : rows_by_sector) {
    if (rows.size() < params.min_size) continue;
    const auto sector_matrix = matrix.subset(rows);
    std::vector<ImageRecord> background;
    background.reserve(rows.size());
    for (std::size_t i = 0; i < sector_matrix.rows(); ++i) {
      const Post& post = store.posts()[post_of.at(sector_matrix.image_id(i))];
      background.push_back({sector_matrix.image_id(i), post.company_id,
                            store.companies().at(post.company_id).esg_risk,
                            static_cast<double>(engagement(post))});
    }

    for (auto cluster : threshold_cluster(sector_matrix, params)) {
      cluster.cluster_id = static_cast<int>(clusters.size());
      std::vector<ImageRecord> members;
      for (auto r : cluster.member_rows) members.push_back(background[r]);
      all_stats.push_back(
          compute_cluster_stats(cluster.cluster_id, std::string(sector_name(sector)), members, background, stat_params));

      SummaryRecord record{cluster.cluster_id, {}};
      record.summary.sample_ids =
          round_robin_sample(cluster, sector_matrix, config.sample_size, sample_seed(config.seed, cluster.cluster_id));
      std::vector<fs::path> paths;
      if (config.paths.images) {
        for (const auto& id : record.summary.sample_ids) {
          if (auto p = image_file(*config.paths.images, id)) paths.push_back(*p);
        }
      }
      if (vlm_backend && !paths.empty()) {
        auto ids = std::move(record.summary.sample_ids);
        try {
          record.summary = summarize_cluster(paths, *vlm_backend, vlm_config, prompts.vlm_summary,
                                             {"cluster " + std::to_string(cluster.cluster_id), {}});
        } catch (const ValidationError&) {
          record.summary = {};
          record.summary.available = false;
        }
        record.summary.sample_ids = std::move(ids);
      } else {
        record.summary.available = false;
      }
      summaries.push_back(std::move(record));

      cluster_sectors.emplace_back(sector_name(sector));
      cluster.seed_row = rows[cluster.seed_row];
      for (auto& r : cluster.member_rows) r = rows[r];
      clusters.push_back(std::move(cluster));
    }
  }

  write_clusters_jsonl(clusters, cluster_sectors, out.clusters());
  write_cluster_stats_jsonl(all_stats, out.cluster_stats());
  write_summaries_jsonl(summaries, out.summaries());
  log_line(options, "cluster: " + std::to_string(matrix.rows()) + " images, " + std::to_string(discarded.size()) +
                        " near-duplicates removed, " + std::to_string(clusters.size()) + " clusters");
}

void cmd_report(const RunConfig& config, const RunOptions& options) {
  const OutputLayout out(config.paths.output);
  require(out.cluster_stats(), "run `themescope cluster` first");
  require(out.summaries(), "run `themescope cluster` first");
  const auto store = load_annotated_store(config);
  const auto& labels = *store.annotations();

  detail::write_file(out.sector_volumes(), sector_volume_csv(sector_volume_report(store, labels)));
  detail::write_file(out.sdg_distribution(), sdg_distribution_csv(sdg_distribution_report(store, labels)));
  detail::write_file(out.temporal(), temporal_csv(temporal_report(store, labels)));
  detail::write_file(out.correlations(),
                     correlation_csv(correlation_report(store, labels, config.significance)));
  detail::write_file(out.engagement(), engagement_csv(engagement_report(store, labels)));

  const auto plates = plate_report(read_cluster_stats_jsonl(out.cluster_stats()),
                                   read_summaries_jsonl(out.summaries()), config.plates);
  detail::write_file(out.plates(), plates_json(plates, config.plates));
  log_line(options, "report: 6 files written to " + out.root.string() + ", " + std::to_string(plates.size()) +
                        " plates");
}

void cmd_run_all(const RunConfig& config, const RunOptions& options) {
  cmd_ingest(config, options);
  cmd_annotate(config, options);
  if (config.evaluation_enabled) cmd_evaluate(config, options);
  cmd_cluster(config, options);
  cmd_report(config, options);
}

}  // namespace themescope
