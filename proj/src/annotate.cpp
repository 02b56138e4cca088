#include "themescope/annotate.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

SdgPrompt build_sdg_prompt(std::string_view text, const PromptAssets& prompts) {
  if (detail::trim(text).empty()) throw ValidationError("cannot build a prompt for blank text");
  return SdgPrompt{prompts.sdg_system, std::string(text)};
}

namespace {

std::optional<int> parse_goal_number(std::string_view s) {
  if (s.empty() || s.size() > 2 || s[0] == '0') return std::nullopt;
  int n = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    n = n * 10 + (c - '0');
  }
  if (n < 1 || n > kGoalCount) return std::nullopt;
  return n;
}

}  // namespace

SdgLabel parse_sdg_response(std::string_view raw) {
  std::string_view s = detail::trim(raw);
  while (!s.empty() && (std::ispunct(static_cast<unsigned char>(s.back())) ||
                        std::isspace(static_cast<unsigned char>(s.back())))) {
    s.remove_suffix(1);
  }
  if (auto n = parse_goal_number(s)) return SdgLabel::goal(*n);
  const std::string lower = detail::to_lower(s);
  if (lower.rfind("sdg", 0) == 0) {
    std::string_view rest = std::string_view(s).substr(3);
    if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    if (auto n = parse_goal_number(rest)) return SdgLabel::goal(*n);
  }
  return SdgLabel::none();
}

SdgLabel majority_vote(std::span<const SdgLabel> labels, std::size_t tie_breaker_index) {
  if (labels.empty()) throw ValidationError("majority vote over no labels");
  if (tie_breaker_index >= labels.size()) throw ValidationError("tie-breaker index out of range");
  std::array<std::size_t, kLabelCount> counts{};
  for (auto l : labels) ++counts[l.index()];
  const auto top = *std::max_element(counts.begin(), counts.end());
  if (std::count(counts.begin(), counts.end(), top) > 1) return labels[tie_breaker_index];
  const auto winner = std::find(counts.begin(), counts.end(), top) - counts.begin();
  return SdgLabel::from_index(static_cast<int>(winner));
}

AnnotationMatrix::AnnotationMatrix(std::vector<std::string> annotator_ids,
                                   std::vector<std::string> post_ids)
    : annotator_ids_(std::move(annotator_ids)),
      post_ids_(std::move(post_ids)),
      labels_(annotator_ids_.size() * post_ids_.size()) {}

std::vector<SdgLabel> AnnotationMatrix::column(std::size_t col) const {
  std::vector<SdgLabel> out;
  out.reserve(rows());
  for (std::size_t r = 0; r < rows(); ++r) out.push_back(at(r, col));
  return out;
}

std::optional<std::size_t> AnnotationMatrix::row_of(std::string_view post_id) const {
  auto it = std::lower_bound(post_ids_.begin(), post_ids_.end(), post_id);
  if (it != post_ids_.end() && *it == post_id) return static_cast<std::size_t>(it - post_ids_.begin());
  // Rows are normally sorted; fall back to a scan for hand-built matrices.
  auto lin = std::find(post_ids_.begin(), post_ids_.end(), post_id);
  if (lin == post_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(lin - post_ids_.begin());
}

std::optional<std::size_t> AnnotationMatrix::column_of(std::string_view annotator_id) const {
  auto it = std::find(annotator_ids_.begin(), annotator_ids_.end(), annotator_id);
  if (it == annotator_ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - annotator_ids_.begin());
}

void AnnotationMatrix::aggregate(std::size_t tie_breaker_index) {
  if (tie_breaker_index >= cols()) throw ValidationError("tie-breaker index out of range");
  std::vector<SdgLabel> out;
  out.reserve(rows());
  for (std::size_t r = 0; r < rows(); ++r) out.push_back(majority_vote(row(r), tie_breaker_index));
  aggregated_ = std::move(out);
}

void AnnotationMatrix::set_aggregated(std::vector<SdgLabel> labels) {
  if (labels.size() != rows()) throw ValidationError("aggregated column has the wrong length");
  aggregated_ = std::move(labels);
}

std::map<std::string, SdgLabel> AnnotationMatrix::aggregated_map() const {
  if (!aggregated_) throw ValidationError("annotation matrix has no aggregated column");
  std::map<std::string, SdgLabel> out;
  for (std::size_t r = 0; r < rows(); ++r) out.emplace(post_ids_[r], (*aggregated_)[r]);
  return out;
}

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct Checkpoint {
  std::mutex mu;
  std::ofstream out;
  std::string pending;
  std::size_t pending_count = 0;
  std::size_t every = 1000;

  void record(const std::string& post_id, const std::string& annotator, SdgLabel label,
              const std::string* error) {
    if (!out.is_open()) return;
    ordered_json line = {{"post_id", post_id}, {"annotator", annotator}, {"label", label.to_string()}};
    if (error != nullptr) line["error"] = *error;
    std::lock_guard lock(mu);
    pending += line.dump();
    pending += '\n';
    if (++pending_count >= every) flush_locked();
  }

  void flush() {
    std::lock_guard lock(mu);
    flush_locked();
  }

 private:
  void flush_locked() {
    if (pending.empty()) return;
    out << pending;
    out.flush();
    pending.clear();
    pending_count = 0;
  }
};

}  // namespace

AnnotateResult annotate_corpus(const CorpusStore& store, std::span<const Annotator> annotators,
                               const AnnotateOptions& options) {
  if (annotators.empty()) throw ValidationError("annotate_corpus needs at least one backend");
  std::vector<std::string> ids;
  for (const auto& a : annotators) {
    a.config.validate();
    if (!a.backend) throw ValidationError("backend " + a.config.annotator_id + " has no transport");
    if (std::find(ids.begin(), ids.end(), a.config.annotator_id) != ids.end()) {
      throw ValidationError("duplicate annotator_id " + a.config.annotator_id);
    }
    ids.push_back(a.config.annotator_id);
  }
  if (options.checkpoint_every == 0) throw ValidationError("checkpoint_every must be >= 1");

  const auto& posts = store.posts();
  std::vector<std::string> post_ids;
  post_ids.reserve(posts.size());
  for (const auto& p : posts) post_ids.push_back(p.post_id);

  AnnotateResult result;
  result.matrix = AnnotationMatrix(ids, post_ids);
  AnnotationMatrix& matrix = result.matrix;
  const std::size_t cols = ids.size();
  std::vector<char> done(posts.size() * cols, 0);

  std::mutex diag_mu;
  auto& diagnostics = result.diagnostics;

  // Resume: everything already in the checkpoint counts as finished.
  if (options.checkpoint && std::filesystem::exists(*options.checkpoint)) {
    std::ifstream in(*options.checkpoint);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error&) {
        // A torn final line from an interrupted write; everything after it is redone.
        break;
      }
      auto row = matrix.row_of(obj.value("post_id", ""));
      auto col = matrix.column_of(obj.value("annotator", ""));
      auto label = SdgLabel::parse(obj.value("label", ""));
      if (!row || !col || !label) continue;
      matrix.set(*row, *col, *label);
      done[*row * cols + *col] = 1;
      if (obj.contains("error")) {
        diagnostics.push_back({post_ids[*row], ids[*col], obj["error"].get<std::string>()});
      }
    }
  }

  Checkpoint checkpoint;
  checkpoint.every = options.checkpoint_every;
  if (options.checkpoint) {
    if (options.checkpoint->has_parent_path()) {
      std::filesystem::create_directories(options.checkpoint->parent_path());
    }
    checkpoint.out.open(*options.checkpoint, std::ios::app);
    if (!checkpoint.out) throw IoError("cannot open checkpoint " + options.checkpoint->string());
  }

  const PromptAssets& prompts = options.prompts ? *options.prompts : PromptAssets::builtin();
  std::atomic<std::size_t> queries{0};

  std::vector<std::vector<std::size_t>> pending(cols);
  for (std::size_t r = 0; r < posts.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!done[r * cols + c]) pending[c].push_back(r);
    }
  }
  std::vector<std::atomic<std::size_t>> cursor(cols);
  for (auto& c : cursor) c = 0;

  auto worker = [&](std::size_t col) {
    const Annotator& annotator = annotators[col];
    for (;;) {
      const std::size_t i = cursor[col].fetch_add(1);
      if (i >= pending[col].size()) return;
      const std::size_t row = pending[col][i];
      const Post& post = posts[row];
      SdgLabel label = SdgLabel::none();
      std::optional<std::string> error;
      try {
        const auto prompt = build_sdg_prompt(post.text, prompts);
        QueryContext ctx{post.post_id, options.sleep};
        queries.fetch_add(1);
        label = parse_sdg_response(
            query_backend(*annotator.backend, annotator.config, prompt.system_text, prompt.user_text, ctx));
      } catch (const std::exception& e) {
        error = e.what();
      }
      matrix.set(row, col, label);
      if (error) {
        std::lock_guard lock(diag_mu);
        diagnostics.push_back({post.post_id, annotator.config.annotator_id, *error});
      }
      checkpoint.record(post.post_id, annotator.config.annotator_id, label,
                        error ? &*error : nullptr);
    }
  };

  {
    std::vector<std::jthread> threads;
    for (std::size_t c = 0; c < cols; ++c) {
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(annotators[c].config.max_in_flight),
                                           std::max<std::size_t>(pending[c].size(), 1));
      for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker, c);
    }
  }
  checkpoint.flush();
  if (checkpoint.out.is_open()) checkpoint.out.close();
  if (options.checkpoint && !options.keep_checkpoint) {
    std::error_code ec;
    std::filesystem::remove(*options.checkpoint, ec);
  }

  std::sort(diagnostics.begin(), diagnostics.end(), [](const auto& a, const auto& b) {
    return std::tie(a.post_id, a.annotator_id) < std::tie(b.post_id, b.annotator_id);
  });
  result.queries = queries.load();
  return result;
}

void write_annotations_jsonl(const AnnotationMatrix& matrix, const std::filesystem::path& path) {
  if (!matrix.has_aggregate()) throw ValidationError("annotations need an aggregated label");
  std::string out;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    ordered_json votes = ordered_json::array();
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      votes.push_back({{"annotator", matrix.annotator_ids()[c]}, {"label", matrix.at(r, c).to_string()}});
    }
    ordered_json row = {{"post_id", matrix.post_ids()[r]},
                        {"label", matrix.aggregated()[r].to_string()},
                        {"votes", std::move(votes)}};
    out += row.dump();
    out += '\n';
  }
  detail::write_file(path, out);
}

AnnotationMatrix read_annotations_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations " + path.string());
  struct Row {
    std::string post_id;
    SdgLabel label;
    std::vector<SdgLabel> votes;
  };
  std::vector<Row> rows;
  std::vector<std::string> annotators;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed annotation: ") + e.what(), line_no);
    }
    Row row;
    row.post_id = obj.value("post_id", "");
    auto label = SdgLabel::parse(obj.value("label", ""));
    if (row.post_id.empty() || !label) throw ParseError("annotation lacks post_id or label", line_no);
    row.label = *label;
    std::vector<std::string> names;
    for (const auto& v : obj.value("votes", json::array())) {
      auto vl = SdgLabel::parse(v.value("label", ""));
      if (!vl) throw ParseError("vote has an invalid label", line_no);
      names.push_back(v.value("annotator", ""));
      row.votes.push_back(*vl);
    }
    if (rows.empty()) {
      annotators = names;
    } else if (names != annotators) {
      throw ParseError("vote annotators differ from the first row", line_no);
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.post_id < b.post_id; });
  std::vector<std::string> post_ids;
  for (const auto& r : rows) post_ids.push_back(r.post_id);
  AnnotationMatrix matrix(annotators, post_ids);
  std::vector<SdgLabel> aggregated;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < annotators.size(); ++c) matrix.set(r, c, rows[r].votes[c]);
    aggregated.push_back(rows[r].label);
  }
  matrix.set_aggregated(std::move(aggregated));
  return matrix;
}

void write_diagnostics_jsonl(std::span<const AnnotationDiagnostic> diagnostics,
                             const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : diagnostics) {
    ordered_json row = {{"post_id", d.post_id}, {"annotator", d.annotator_id}, {"message", d.message}};
    out += row.dump();
    out += '\n';
  }
  detail::write_file(path, out);
}

}  // namespace themescope
