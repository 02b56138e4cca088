#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "themescope/corpus.hpp"

namespace themescope {

/// Row-per-image unit vectors with the image ids and owning companies
/// aligned to the rows.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// L2-normalises every row. Throws ValidationError naming the first
  /// zero-norm row, or when the sizes disagree.
  EmbeddingMatrix(std::size_t dim, std::vector<float> values, std::vector<std::string> image_ids,
                  std::vector<std::string> company_of);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return image_ids_.size(); }
  bool empty() const { return image_ids_.empty(); }

  std::span<const float> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  const std::vector<std::string>& image_ids() const { return image_ids_; }
  const std::string& image_id(std::size_t i) const { return image_ids_[i]; }
  const std::string& company_of(std::size_t i) const { return company_of_[i]; }
  const std::vector<std::string>& companies() const { return company_of_; }

  /// Inner product of two rows, accumulated in double in index order.
  double similarity(std::size_t i, std::size_t j) const;

  /// Rows in the given order.
  EmbeddingMatrix subset(std::span<const std::size_t> rows) const;

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::string> image_ids_;
  std::vector<std::string> company_of_;
};

/// image_id -> index of the post carrying it. When several posts list the
/// same image the smallest post_id wins.
std::unordered_map<std::string, std::size_t> media_index(const CorpusStore& store);

struct RawEmbeddings {
  std::size_t dim = 0;
  std::vector<float> values;  // count x dim, row-major
  std::size_t count() const { return dim == 0 ? 0 : values.size() / dim; }
};

/// Reads the EMB1 container: magic "EMB1", u16 version (1), u16 reserved,
/// u32 dim, u64 count, then count*dim little-endian float32.
RawEmbeddings read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const std::filesystem::path& path, std::size_t dim,
                          std::span<const float> values);

std::vector<std::string> read_id_file(const std::filesystem::path& path);

/// Joins the binary matrix, the row-aligned ids file and the corpus.
EmbeddingMatrix load_embeddings(const std::filesystem::path& bin_path,
                                const std::filesystem::path& ids_path, const CorpusStore& store);

}  // namespace themescope
