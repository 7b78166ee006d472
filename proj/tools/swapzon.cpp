#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "swapzon/swapzon.h"

namespace {

int exit_code(swz_status s) {
  switch (s) {
    case SWZ_OK: return 0;
    case SWZ_REJECT: return 1;
    case SWZ_ERR_INVARIANT: return 3;
    default: return 2;
  }
}

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("SWAPZON_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int report_error(swz_status s) {
  std::cerr << "error: " << swz_last_error() << "\n";
  return exit_code(s);
}

void print_line(const char* line, void*) {
  std::cout << line << "\n";
  std::cout.flush();
}

int run(const std::string& config, const std::string& out, unsigned threads) {
  char* manifest = nullptr;
  const swz_status s = swz_run_config_file(config.c_str(), out.empty() ? nullptr : out.c_str(),
                                           resolve_threads(threads), &manifest);
  if (s != SWZ_OK && s != SWZ_REJECT) return report_error(s);
  const auto m = nlohmann::json::parse(manifest);
  swz_string_free(manifest);
  for (const auto& e : m.at("experiments")) {
    std::cout << "exp" << e.value("index", 0) << " " << e.at("kind").get<std::string>() << ": "
              << e.at("verdict").get<std::string>();
    if (e.contains("statistic")) {
      std::cout << " (statistic " << e.at("statistic").dump() << ", threshold "
                << e.at("threshold").dump() << ")";
    }
    std::cout << "\n";
  }
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swap-invariance and zonoid-equivalence toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(swz_version()));

  std::string config;
  std::string run_out;
  unsigned run_threads = 0;
  auto* run_cmd = app.add_subcommand("run", "Run the experiments in a JSON config");
  run_cmd->add_option("config", config, "Config file")->required();
  run_cmd->add_option("--out", run_out, "Output directory (overrides the config)");
  run_cmd->add_option("--threads", run_threads, "Worker threads");

  std::string only;
  std::uint64_t seed = 0xC0FFEE;
  std::size_t samples = 0;
  unsigned suite_threads = 0;
  std::string suite_out = "paper-suite-out";
  auto* suite_cmd = app.add_subcommand("paper-suite", "Run the bundled acceptance checks");
  suite_cmd->add_option("--only", only, "Comma-separated criterion names");
  suite_cmd->add_option("--seed", seed, "Master seed");
  suite_cmd->add_option("--samples", samples, "Main sample size");
  suite_cmd->add_option("--threads", suite_threads, "Worker threads");
  suite_cmd->add_option("--out", suite_out, "Output directory");

  auto* list_cmd = app.add_subcommand("list-models", "List built-in models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run_cmd) return run(config, run_out, run_threads);
  if (*list_cmd) {
    char* text = nullptr;
    const swz_status s = swz_list_models(&text);
    if (s != SWZ_OK) return report_error(s);
    std::cout << text;
    swz_string_free(text);
    return 0;
  }
  swz_suite_options o;
  swz_suite_options_init(&o);
  o.only = only.empty() ? nullptr : only.c_str();
  o.seed = seed;
  o.samples = samples;
  o.threads = resolve_threads(suite_threads);
  o.out_dir = suite_out.c_str();
  const swz_status s = swz_paper_suite(&o, print_line, nullptr);
  if (s != SWZ_OK && s != SWZ_REJECT) return report_error(s);
  return exit_code(s);
}
