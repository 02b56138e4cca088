#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "themescope/config.hpp"
#include "themescope/error.hpp"
#include "themescope/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Error text on a single line, as the CLI contract requires.
std::string one_line(std::string text) {
  for (auto& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ThemeScope: SDG annotation and visual theme analysis of corporate social-media corpora"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool mock_backends = false;
  app.add_option("--config", config_path, "Run configuration (TOML)")->required();
  app.add_option("--seed", seed, "RNG seed; overrides the config value");
  app.add_option("--workers", workers, "Worker budget; 0 uses every core");
  app.add_flag("--mock-backends", mock_backends, "Swap every backend for the deterministic mocks");

  using Command = void (*)(const themescope::RunConfig&, const themescope::RunOptions&);
  const std::map<std::string, std::pair<Command, std::string>> commands = {
      {"ingest", {themescope::cmd_ingest, "Load companies and posts into the output corpus"}},
      {"annotate", {themescope::cmd_annotate, "Label every post with the backend ensemble"}},
      {"evaluate", {themescope::cmd_evaluate, "Score annotators against hashtag ground truth"}},
      {"cluster", {themescope::cmd_cluster, "Deduplicate, cluster and summarise post images"}},
      {"report", {themescope::cmd_report, "Write the statistical reports"}},
      {"run-all", {themescope::cmd_run_all, "Run every stage in order"}},
  };
  Command selected = nullptr;
  for (const auto& [name, entry] : commands) {
    app.add_subcommand(name, entry.second)->callback([&selected, fn = entry.first] { selected = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    auto config = themescope::load_config(config_path);
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    themescope::RunOptions options;
    options.mock_backends = mock_backends;
    options.log = &std::cout;
    selected(config, options);
  } catch (const themescope::ValidationError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kExitValidation;
  } catch (const themescope::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kExitRuntime;
  }
  return 0;
}
