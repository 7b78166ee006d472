#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "parallel.hpp"

namespace swapzon {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit statuses shared by the CLI and the C API.
enum class ExitStatus : int { Pass = 0, Reject = 1, Config = 2, Invariant = 3 };

/// One experiment's outputs, kept in memory until the run writes them.
struct ExperimentResult {
  std::string kind;
  bool pass = true;
  nlohmann::json summary;
  std::map<std::string, std::string> files;  // file name -> contents
};

/// Dispatches one experiment object. Throws ConfigError on a malformed or
/// unknown experiment, DomainError on invalid parameters.
ExperimentResult run_experiment(const nlohmann::json& experiment, std::size_t index,
                                std::uint64_t master_seed, unsigned threads);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides the config's "output"
  std::optional<unsigned> threads;  // overrides the config's "threads"
};

struct RunResult {
  nlohmann::json manifest;
  bool all_pass = true;
  std::filesystem::path out_dir;
};

/// A single experiment object or {"experiments": [...]} with optional
/// top-level "master_seed" and "output". Writes manifest.json, run_info.json
/// and per-experiment exp<i>_<kind>.{json,csv}.
RunResult run_config(const nlohmann::json& config, const RunOptions& options);
/// Throws ConfigError on unreadable or malformed JSON.
RunResult run_config_file(const std::filesystem::path& path, const RunOptions& options);

/// Catalog listing, one model per block in alphabetical order.
std::string list_models_text();

struct SuiteOptions {
  std::vector<std::string> only;  // empty: every criterion
  std::uint64_t seed = kDefaultMasterSeed;
  std::optional<std::size_t> samples;  // overrides the main sample size
  unsigned threads = 1;
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const std::string&)> on_line;  // called once per verdict line
};

struct SuiteResult {
  nlohmann::json manifest;
  bool all_pass = true;
  std::vector<std::string> lines;
};

/// Names of the bundled acceptance criteria, in run order.
const std::vector<std::string>& suite_criteria();

/// Runs the acceptance checks with a fixed seed. Throws ConfigError on an
/// unknown --only name.
SuiteResult paper_suite(const SuiteOptions& options);

/// Status for an exception escaping run_config / paper_suite.
ExitStatus exit_status_for(const std::exception& e);

/// Writes bytes exactly (no newline translation). Throws IoError.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace swapzon
