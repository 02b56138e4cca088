#include "themescope/config.hpp"

#include <set>
#include <sstream>

#include <toml.hpp>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

namespace {

std::string where(const toml::node& node) {
  std::ostringstream ss;
  ss << node.source().begin;
  return ss.str();
}

void reject_unknown(const toml::table& table, std::string_view section,
                    std::initializer_list<std::string_view> allowed) {
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, node] : table) {
    if (!keys.contains(key.str())) {
      throw ValidationError("config: unknown key '" + std::string(key.str()) + "' in " +
                            std::string(section) + " at " + where(node));
    }
  }
}

const toml::table* sub_table(const toml::table& root, std::string_view name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) throw ValidationError("config: '" + std::string(name) + "' must be a table");
  return t;
}

template <typename T>
std::optional<T> get(const toml::table& t, std::string_view section, std::string_view key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) return *v;  // integers widen
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->as_boolean()) return v->get();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->as_string()) return v->get();
  } else {
    if (auto v = node->as_integer()) return v->get();
  }
  throw ValidationError("config: " + std::string(section) + "." + std::string(key) + " has the wrong type");
}

std::int64_t non_negative(std::int64_t v, std::string_view key) {
  if (v < 0) throw ValidationError("config: " + std::string(key) + " must be >= 0");
  return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

BackendConfig parse_backend(const toml::table& t, std::string section, int default_max_tokens) {
  reject_unknown(t, section,
                 {"id", "endpoint", "model", "timeout_ms", "max_in_flight", "max_retries",
                  "retry_base_delay_ms", "max_tokens", "temperature"});
  BackendConfig b;
  b.max_tokens = default_max_tokens;
  b.annotator_id = get<std::string>(t, section, "id").value_or("");
  if (b.annotator_id.empty()) throw ValidationError("config: " + section + ".id is required");
  section += "[" + b.annotator_id + "]";
  b.endpoint_url = get<std::string>(t, section, "endpoint").value_or("");
  b.model_name = get<std::string>(t, section, "model").value_or("");
  if (auto v = get<std::int64_t>(t, section, "timeout_ms")) b.timeout = std::chrono::milliseconds(*v);
  if (auto v = get<std::int64_t>(t, section, "max_in_flight")) b.max_in_flight = static_cast<int>(*v);
  if (auto v = get<std::int64_t>(t, section, "max_retries")) b.max_retries = static_cast<int>(*v);
  if (auto v = get<std::int64_t>(t, section, "retry_base_delay_ms")) {
    b.retry_base_delay = std::chrono::milliseconds(non_negative(*v, section + ".retry_base_delay_ms"));
  }
  if (auto v = get<std::int64_t>(t, section, "max_tokens")) b.max_tokens = static_cast<int>(*v);
  if (auto v = get<double>(t, section, "temperature")) b.temperature = *v;
  return b;
}

}  // namespace

void RunConfig::validate() const {
  if (paths.companies.empty()) throw ValidationError("config: paths.companies is required");
  if (paths.posts.empty()) throw ValidationError("config: paths.posts is required");
  if (paths.output.empty()) throw ValidationError("config: paths.output is required");
  if (paths.embeddings.has_value() != paths.embedding_ids.has_value()) {
    throw ValidationError("config: paths.embeddings and paths.embedding_ids must be set together");
  }

  std::set<std::string> ids;
  for (const auto& b : backends) {
    b.validate();
    if (!ids.insert(b.annotator_id).second) {
      throw ValidationError("config: duplicate backend id '" + b.annotator_id + "'");
    }
  }
  if (vlm) vlm->validate();
  if (tie_breaker.empty()) throw ValidationError("config: annotate.tie_breaker is empty");
  if (tie_breaker == kAutoTieBreaker) {
    if (!evaluation_enabled) {
      throw ValidationError("config: tie_breaker = \"auto\" requires evaluate.enabled = true");
    }
  } else if (!ids.contains(tie_breaker)) {
    throw ValidationError("config: tie_breaker '" + tie_breaker + "' is not a configured backend id");
  }
  if (checkpoint_every == 0) throw ValidationError("config: annotate.checkpoint_every must be >= 1");

  if (!(cluster.tau > 0.0 && cluster.tau < 1.0)) throw ValidationError("config: cluster.tau must lie in (0, 1)");
  if (cluster.min_size < 2) throw ValidationError("config: cluster.min_size must be >= 2");
  if (cluster.block == 0) throw ValidationError("config: cluster.block must be >= 1");
  if (dedup_hamming < 0 || dedup_hamming > 64) {
    throw ValidationError("config: cluster.dedup_hamming must lie in [0, 64]");
  }
  if (sample_size == 0) throw ValidationError("config: cluster.sample_size must be >= 1");
  if (!(significance > 0.0 && significance < 1.0)) {
    throw ValidationError("config: cluster.significance must lie in (0, 1)");
  }
  if (plates.top_k == 0) throw ValidationError("config: plates.top_k must be >= 1");
  if (!(plates.min_entropy >= 0.0 && plates.min_entropy <= 1.0)) {
    throw ValidationError("config: plates.min_entropy must lie in [0, 1]");
  }
}

RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream ss;
    ss << "config: " << e.description() << " at " << e.source().begin;
    throw ValidationError(ss.str());
  }
  reject_unknown(root, "top level",
                 {"seed", "workers", "paths", "ingest", "annotate", "evaluate", "backends", "vlm", "cluster",
                  "plates"});

  RunConfig cfg;
  if (auto v = get<std::int64_t>(root, "top level", "seed")) cfg.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get<std::int64_t>(root, "top level", "workers")) {
    cfg.workers = static_cast<unsigned>(non_negative(*v, "workers"));
  }

  if (const auto* t = sub_table(root, "paths")) {
    reject_unknown(*t, "[paths]",
                   {"companies", "posts", "output", "embeddings", "embedding_ids", "images", "sdg_prompt",
                    "vlm_prompt", "hashtags"});
    auto path = [&](std::string_view key) -> std::optional<std::filesystem::path> {
      if (auto v = get<std::string>(*t, "paths", key)) return resolve(base_dir, *v);
      return std::nullopt;
    };
    if (auto p = path("companies")) cfg.paths.companies = *p;
    if (auto p = path("posts")) cfg.paths.posts = *p;
    cfg.paths.output = path("output").value_or(resolve(base_dir, "out"));
    cfg.paths.embeddings = path("embeddings");
    cfg.paths.embedding_ids = path("embedding_ids");
    cfg.paths.images = path("images");
    cfg.paths.sdg_prompt = path("sdg_prompt");
    cfg.paths.vlm_prompt = path("vlm_prompt");
    cfg.paths.hashtags = path("hashtags");
  } else {
    cfg.paths.output = resolve(base_dir, "out");
  }

  if (const auto* t = sub_table(root, "ingest")) {
    reject_unknown(*t, "[ingest]", {"on_malformed"});
    if (auto v = get<std::string>(*t, "ingest", "on_malformed")) {
      if (*v == "skip") {
        cfg.on_malformed = MalformedLinePolicy::Skip;
      } else if (*v == "abort") {
        cfg.on_malformed = MalformedLinePolicy::Abort;
      } else {
        throw ValidationError("config: ingest.on_malformed must be \"skip\" or \"abort\"");
      }
    }
  }

  if (const auto* t = sub_table(root, "annotate")) {
    reject_unknown(*t, "[annotate]", {"tie_breaker", "checkpoint_every"});
    if (auto v = get<std::string>(*t, "annotate", "tie_breaker")) cfg.tie_breaker = *v;
    if (auto v = get<std::int64_t>(*t, "annotate", "checkpoint_every")) {
      cfg.checkpoint_every = static_cast<std::size_t>(non_negative(*v, "annotate.checkpoint_every"));
    }
  }

  if (const auto* t = sub_table(root, "evaluate")) {
    reject_unknown(*t, "[evaluate]", {"enabled"});
    if (auto v = get<bool>(*t, "evaluate", "enabled")) cfg.evaluation_enabled = *v;
  }

  if (const auto* node = root.get("backends")) {
    const auto* arr = node->as_array();
    if (!arr) throw ValidationError("config: backends must be an array of tables ([[backends]])");
    for (const auto& item : *arr) {
      const auto* t = item.as_table();
      if (!t) throw ValidationError("config: every [[backends]] entry must be a table");
      cfg.backends.push_back(parse_backend(*t, "backends", 8));
    }
  }

  if (const auto* t = sub_table(root, "vlm")) cfg.vlm = parse_backend(*t, "vlm", 256);

  if (const auto* t = sub_table(root, "cluster")) {
    reject_unknown(*t, "[cluster]",
                   {"tau", "min_size", "block", "dedup_hamming", "sample_size", "risk_test_unit",
                    "significance"});
    if (auto v = get<double>(*t, "cluster", "tau")) cfg.cluster.tau = *v;
    if (auto v = get<std::int64_t>(*t, "cluster", "min_size")) {
      cfg.cluster.min_size = static_cast<std::size_t>(non_negative(*v, "cluster.min_size"));
    }
    if (auto v = get<std::int64_t>(*t, "cluster", "block")) {
      cfg.cluster.block = static_cast<std::size_t>(non_negative(*v, "cluster.block"));
    }
    if (auto v = get<std::int64_t>(*t, "cluster", "dedup_hamming")) cfg.dedup_hamming = static_cast<int>(*v);
    if (auto v = get<std::int64_t>(*t, "cluster", "sample_size")) {
      cfg.sample_size = static_cast<std::size_t>(non_negative(*v, "cluster.sample_size"));
    }
    if (auto v = get<std::string>(*t, "cluster", "risk_test_unit")) {
      auto unit = parse_risk_test_unit(*v);
      if (!unit) throw ValidationError("config: cluster.risk_test_unit must be \"image\" or \"company\"");
      cfg.risk_unit = *unit;
    }
    if (auto v = get<double>(*t, "cluster", "significance")) cfg.significance = *v;
  }

  if (const auto* t = sub_table(root, "plates")) {
    reject_unknown(*t, "[plates]", {"min_companies", "min_entropy", "top_k"});
    if (auto v = get<std::int64_t>(*t, "plates", "min_companies")) {
      cfg.plates.min_companies = static_cast<std::size_t>(non_negative(*v, "plates.min_companies"));
    }
    if (auto v = get<double>(*t, "plates", "min_entropy")) cfg.plates.min_entropy = *v;
    if (auto v = get<std::int64_t>(*t, "plates", "top_k")) {
      cfg.plates.top_k = static_cast<std::size_t>(non_negative(*v, "plates.top_k"));
    }
  }
  cfg.plates.significance = cfg.significance;

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const IoError&) {
    throw ValidationError("config file not found: " + path.string());
  }
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(text, base);
}

}  // namespace themescope
