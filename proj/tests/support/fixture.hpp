#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace support {

std::filesystem::path source_dir();
std::filesystem::path synthetic_dir();
std::filesystem::path phash_dir();
/// Path of the built CLI; empty when the test target was not given one.
std::filesystem::path cli_path();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ts");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Config for the synthetic fixture with absolute input paths and the given
/// output directory; `extra` is appended verbatim.
std::filesystem::path write_synthetic_config(const std::filesystem::path& dir,
                                             const std::filesystem::path& output,
                                             const std::string& extra = "");

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args);

/// Relative path -> file bytes, for every regular file under root.
std::map<std::string, std::string> read_tree(const std::filesystem::path& root);

std::string slurp(const std::filesystem::path& path);

/// PNG bytes of an RGB raster (row-major, 3 bytes per pixel).
std::string encode_png(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb);

}  // namespace support
