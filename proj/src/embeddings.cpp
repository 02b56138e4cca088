#include "themescope/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "detail.hpp"
#include "themescope/error.hpp"

namespace themescope {

static_assert(std::endian::native == std::endian::little,
              "embedding I/O assumes a little-endian host");

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> values,
                                 std::vector<std::string> image_ids,
                                 std::vector<std::string> company_of)
    : dim_(dim),
      values_(std::move(values)),
      image_ids_(std::move(image_ids)),
      company_of_(std::move(company_of)) {
  if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
  if (values_.size() != image_ids_.size() * dim_) {
    throw ValidationError("embedding values do not match " + std::to_string(image_ids_.size()) +
                          " rows of dimension " + std::to_string(dim_));
  }
  if (company_of_.size() != image_ids_.size()) {
    throw ValidationError("company list does not align with image ids");
  }
  for (std::size_t i = 0; i < image_ids_.size(); ++i) {
    float* row = values_.data() + i * dim_;
    double sq = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) sq += static_cast<double>(row[k]) * row[k];
    if (!(sq > 0.0) || !std::isfinite(sq)) {
      throw ValidationError("embedding row " + std::to_string(i) + " (" + image_ids_[i] +
                            ") has zero or non-finite norm");
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t k = 0; k < dim_; ++k) row[k] = static_cast<float>(row[k] * inv);
  }
}

double EmbeddingMatrix::similarity(std::size_t i, std::size_t j) const {
  const float* a = values_.data() + i * dim_;
  const float* b = values_.data() + j * dim_;
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return s;
}

EmbeddingMatrix EmbeddingMatrix::subset(std::span<const std::size_t> rows) const {
  EmbeddingMatrix out;
  out.dim_ = dim_;
  out.values_.reserve(rows.size() * dim_);
  for (auto r : rows) {
    auto src = row(r);
    out.values_.insert(out.values_.end(), src.begin(), src.end());
    out.image_ids_.push_back(image_ids_[r]);
    out.company_of_.push_back(company_of_[r]);
  }
  return out;
}

std::unordered_map<std::string, std::size_t> media_index(const CorpusStore& store) {
  std::unordered_map<std::string, std::size_t> index;
  const auto& posts = store.posts();  // sorted by post_id
  for (std::size_t i = 0; i < posts.size(); ++i) {
    for (const auto& media : posts[i].media_ids) index.emplace(media, i);
  }
  return index;
}

namespace {

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ValidationError("truncated embedding header in " + path.string());
  return v;
}

}  // namespace

RawEmbeddings read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "EMB1", 4) != 0) {
    throw ValidationError("bad magic in " + path.string() + " (expected EMB1)");
  }
  const auto version = read_le<std::uint16_t>(in, path);
  if (version != 1) {
    throw ValidationError("unsupported embedding version " + std::to_string(version) + " in " +
                          path.string());
  }
  (void)read_le<std::uint16_t>(in, path);
  const auto dim = read_le<std::uint32_t>(in, path);
  const auto count = read_le<std::uint64_t>(in, path);
  if (dim == 0) throw ValidationError("embedding dimension is zero in " + path.string());

  RawEmbeddings raw;
  raw.dim = dim;
  raw.values.resize(static_cast<std::size_t>(count) * dim);
  in.read(reinterpret_cast<char*>(raw.values.data()),
          static_cast<std::streamsize>(raw.values.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != raw.values.size() * sizeof(float)) {
    throw ValidationError("embedding payload shorter than " + std::to_string(count) + " rows in " +
                          path.string());
  }
  return raw;
}

void write_embedding_file(const std::filesystem::path& path, std::size_t dim,
                          std::span<const float> values) {
  if (dim == 0 || values.size() % dim != 0) throw ValidationError("bad embedding shape");
  std::string out;
  out.append("EMB1", 4);
  auto put = [&out](auto v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put(std::uint16_t{1});
  put(std::uint16_t{0});
  put(static_cast<std::uint32_t>(dim));
  put(static_cast<std::uint64_t>(values.size() / dim));
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float));
  detail::write_file(path, out);
}

std::vector<std::string> read_id_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ids file " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    auto id = detail::trim(line);
    if (!id.empty()) ids.emplace_back(id);
  }
  return ids;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& bin_path,
                                const std::filesystem::path& ids_path, const CorpusStore& store) {
  auto raw = read_embedding_file(bin_path);
  auto ids = read_id_file(ids_path);
  if (ids.size() != raw.count()) {
    throw ValidationError("ids file has " + std::to_string(ids.size()) + " entries but " +
                          bin_path.string() + " holds " + std::to_string(raw.count()) + " rows");
  }
  const auto index = media_index(store);
  std::vector<std::string> companies;
  companies.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = index.find(ids[i]);
    if (it == index.end()) {
      throw ValidationError("image " + ids[i] + " (row " + std::to_string(i) +
                            ") is not attached to any post");
    }
    companies.push_back(store.posts()[it->second].company_id);
  }
  return EmbeddingMatrix(raw.dim, std::move(raw.values), std::move(ids), std::move(companies));
}

}  // namespace themescope
