#include "fixture.hpp"

#include <sys/wait.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <png.h>
#include <unistd.h>

namespace support {

namespace fs = std::filesystem;

fs::path source_dir() { return THEMESCOPE_SOURCE_DIR; }
fs::path synthetic_dir() { return source_dir() / "tests" / "fixtures" / "synthetic"; }
fs::path phash_dir() { return source_dir() / "tests" / "fixtures" / "phash"; }

fs::path cli_path() {
#ifdef THEMESCOPE_CLI
  return THEMESCOPE_CLI;
#else
  return {};
#endif
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  for (;;) {
    auto candidate = fs::temp_directory_path() /
                     (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                      std::to_string(rd() % 100000));
    if (fs::create_directories(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

std::string toml_string(const fs::path& p) {
  std::string out = "\"";
  for (char c : p.string()) {
    if (c == '\\' || c == '"') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

fs::path write_synthetic_config(const fs::path& dir, const fs::path& output, const std::string& extra) {
  const auto fx = synthetic_dir();
  std::ostringstream ss;
  ss << "seed = 7\n\n[paths]\n"
     << "companies = " << toml_string(fx / "companies.csv") << "\n"
     << "posts = " << toml_string(fx / "posts.jsonl") << "\n"
     << "embeddings = " << toml_string(fx / "embeddings.emb") << "\n"
     << "embedding_ids = " << toml_string(fx / "embedding_ids.txt") << "\n"
     << "images = " << toml_string(fx / "images") << "\n"
     << "output = " << toml_string(output) << "\n\n"
     << "[annotate]\ntie_breaker = \"auto\"\n\n";
  for (const char* id : {"llama", "mistral", "qwen"}) {
    ss << "[[backends]]\nid = \"" << id << "\"\nendpoint = \"http://127.0.0.1:9/v1/chat/completions\"\nmodel = \""
       << id << "\"\n\n";
  }
  ss << extra;
  const auto path = dir / "config.toml";
  std::ofstream(path) << ss.str();
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::vector<std::string>& args) {
  if (cli_path().empty()) throw std::runtime_error("CLI path not configured for this test target");
  TempDir io("cli");
  std::string cmd = shell_quote(cli_path().string());
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >" + shell_quote((io.path() / "out").string()) + " 2>" + shell_quote((io.path() / "err").string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(io.path() / "out");
  r.err = slurp(io.path() / "err");
  return r;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), root).generic_string()] = slurp(entry.path());
  }
  return out;
}

std::string encode_png(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, rgb.data(), 0, nullptr)) {
    throw std::runtime_error("png size query failed");
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace support
