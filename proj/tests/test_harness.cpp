#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "errors.hpp"
#include "harness.hpp"

using namespace swapzon;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("swapzon_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "run_info.json") out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

const json kConfig = json::parse(R"({
  "master_seed": 5,
  "experiments": [
    {"kind": "zonoid", "model": "three_value", "u": [1, -1], "N": 20000, "expected": 0.3333333333333333},
    {"kind": "swap-test", "model": "sym_three_value", "n": 3, "N": 5000},
    {"kind": "exch-test", "model": "sym_three_value", "k": 2, "N": 5000},
    {"kind": "reconstruct", "model": {"name": "iid", "params": {"dist": "bernoulli"}}, "n": 2,
     "mode": "exact"},
    {"kind": "intensity", "model": "poisson", "sets": [[[0, 1]], [[1, 2]]], "N": 2000},
    {"kind": "ergodic", "model": "poisson", "n": 100, "checkpoints": [10, 100], "N": 500},
    {"kind": "represent", "model": "sym_three_value", "k": 2, "p": "inf", "N": 2000}
  ]
})");

}  // namespace

TEST_CASE("run_config writes every experiment and a manifest") {
  const fs::path out = scratch("run");
  const RunResult r = run_config(kConfig, {out, 1u});
  CHECK_FALSE(r.all_pass);
  const auto& exps = r.manifest.at("experiments");
  REQUIRE(exps.size() == 7);
  const std::vector<std::string> verdicts{"pass", "pass", "reject", "pass", "pass", "pass", "pass"};
  for (std::size_t i = 0; i < 7; ++i) CHECK(exps[i].at("verdict") == verdicts[i]);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "run_info.json"));
  CHECK(fs::exists(out / "exp0_zonoid.json"));
  CHECK(fs::exists(out / "exp3_reconstruct_pmf.csv"));
  CHECK(fs::exists(out / "exp5_ergodic_path.csv"));
  CHECK(slurp(out / "exp5_ergodic_path.csv").rfind("n,mu,ratio,aux_x\n", 0) == 0);
  CHECK(json::parse(slurp(out / "manifest.json")) == r.manifest);
  CHECK_FALSE(r.manifest.dump().find("wall_time") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("outputs are byte-identical across thread counts") {
  const fs::path a = scratch("t1");
  const fs::path b = scratch("t4");
  run_config(kConfig, {a, 1u});
  run_config(kConfig, {b, 4u});
  CHECK(dir_bytes(a) == dir_bytes(b));
  CHECK(slurp(a / "run_info.json") != slurp(b / "run_info.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("config errors") {
  const fs::path out = scratch("bad");
  const auto status = [&](const json& cfg) {
    try {
      run_config(cfg, {out, 1u});
      return ExitStatus::Pass;
    } catch (const std::exception& e) {
      return exit_status_for(e);
    }
  };
  CHECK(status(json::parse(R"({"kind": "nope", "model": "iid"})")) == ExitStatus::Config);
  CHECK(status(json::parse(R"({"kind": "zonoid", "model": "unknown", "u": [1]})")) ==
        ExitStatus::Config);
  CHECK(status(json::parse(R"({"kind": "zonoid", "model": "iid"})")) == ExitStatus::Config);
  CHECK(status(json::parse(R"({"kind": "zonoid", "model": "iid", "u": [1], "N": 10})")) ==
        ExitStatus::Config);
  CHECK(status(json::parse(R"({"kind": "swap-test", "model": "iid", "n": 2, "threshold": -1})")) ==
        ExitStatus::Config);
  CHECK(status(json::parse(R"({"kind": "intensity", "model": "three_value", "sets": [[[0, 1]]]})")) ==
        ExitStatus::Config);
  CHECK(status(json::parse(R"({"experiments": []})")) == ExitStatus::Config);

  const fs::path file = scratch("malformed.json");
  {
    std::ofstream f(file);
    f << "{\"kind\": ";
  }
  CHECK_THROWS_AS(run_config_file(file, {out, 1u}), ConfigError);
  CHECK_THROWS_AS(run_config_file(scratch("missing.json"), {out, 1u}), ConfigError);
  fs::remove(file);
  fs::remove_all(out);
}

TEST_CASE("single experiment objects and per-experiment seeds") {
  const json one = json::parse(R"({"kind": "zonoid", "model": "iid", "u": [1, 1], "N": 1000})");
  const fs::path out = scratch("one");
  const RunResult r = run_config(one, {out, std::nullopt});
  CHECK(r.all_pass);
  CHECK(r.manifest.at("experiments").size() == 1);
  json seeded = one;
  seeded["master_seed"] = 77;
  const ExperimentResult a = run_experiment(one, 0, kDefaultMasterSeed, 1);
  const ExperimentResult b = run_experiment(seeded, 0, kDefaultMasterSeed, 1);
  CHECK(a.summary.at("estimate") != b.summary.at("estimate"));
  CHECK(a.summary.at("estimate") == run_experiment(one, 0, kDefaultMasterSeed, 3).summary.at("estimate"));
  fs::remove_all(out);
}

TEST_CASE("model listing") {
  const std::string text = list_models_text();
  CHECK(text.find("poisson_scaled — Example (ex-swap-rm)\n") != std::string::npos);
  CHECK(text.find("three_value — Example (ex-swap-from-exch-special)\n") != std::string::npos);
  CHECK(text.find("    kind: measure\n") != std::string::npos);
  CHECK(text.find("    param rate:") != std::string::npos);
  std::size_t last = 0;
  for (const char* name : {"diffuse_alpha", "iid ", "iid_divide", "lognormal", "poisson ",
                           "poisson_scaled", "sym_three_value", "three_value"}) {
    const std::size_t at = text.find(std::string("\n") + name);
    const std::size_t pos = std::string(name) == "diffuse_alpha" ? 0 : at;
    REQUIRE(pos != std::string::npos);
    CHECK(pos >= last);
    last = pos;
  }
}

TEST_CASE("suite selection") {
  SuiteOptions o;
  o.only = {"reconstruct"};
  o.samples = 2000;
  std::vector<std::string> seen;
  o.on_line = [&](const std::string& l) { seen.push_back(l); };
  const fs::path out = scratch("suite");
  o.out_dir = out;
  const SuiteResult r = paper_suite(o);
  REQUIRE(r.lines.size() == 1);
  CHECK(r.lines == seen);
  CHECK(r.lines[0].rfind("PASS reconstruct (", 0) == 0);
  CHECK(fs::exists(out / "reconstruct.csv"));
  CHECK(slurp(out / "reconstruct.csv").rfind("check_id,value,target,se,bound,ess,n_samples,verdict\n", 0) == 0);
  CHECK(suite_criteria().size() == 7);
  o.only = {"bogus"};
  CHECK_THROWS_AS(paper_suite(o), ConfigError);
  fs::remove_all(out);
}

TEST_CASE("exit statuses") {
  CHECK(exit_status_for(ConfigError("x")) == ExitStatus::Config);
  CHECK(exit_status_for(DomainError("x")) == ExitStatus::Config);
  CHECK(exit_status_for(std::logic_error("x")) == ExitStatus::Invariant);
}
