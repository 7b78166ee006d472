#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "swapzon_test_cli";

int run(const std::string& args, std::string* output = nullptr) {
  fs::create_directories(kDir);
  const fs::path log = kDir / "stdout.txt";
  const std::string cmd = std::string("\"") + SWAPZON_CLI + "\" " + args + " > \"" + log.string() +
                          "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::ostringstream s;
    s << in.rdbuf();
    *output = s.str();
  }
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kDir);
  const fs::path p = kDir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("run exits with the verdict") {
  std::string out;
  const fs::path pass = write_config(
      "pass.json", R"({"kind": "zonoid", "model": "three_value", "u": [1, -1], "N": 5000})");
  CHECK(run("run " + pass.string() + " --out " + (kDir / "o1").string() + " --threads 2", &out) == 0);
  CHECK(out.find("exp0 zonoid: pass") != std::string::npos);
  CHECK(fs::exists(kDir / "o1" / "manifest.json"));

  const fs::path reject = write_config(
      "reject.json", R"({"kind": "exch-test", "model": "sym_three_value", "k": 2, "N": 3000})");
  CHECK(run("run " + reject.string() + " --out " + (kDir / "o2").string(), &out) == 1);
  CHECK(out.find("exp0 exch-test: reject (statistic ") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
  std::string out;
  const fs::path bad = write_config("bad.json", "{\"kind\": ");
  CHECK(run("run " + bad.string() + " --out " + (kDir / "o3").string(), &out) == 2);
  CHECK(out.rfind("error: ", 0) == 0);
  const fs::path unknown = write_config("unknown.json", R"({"kind": "zonoid", "model": "x", "u": [1]})");
  CHECK(run("run " + unknown.string() + " --out " + (kDir / "o4").string()) == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("paper-suite --only nope --out " + (kDir / "o5").string()) == 2);
}

TEST_CASE("listing and suite") {
  std::string out;
  CHECK(run("list-models", &out) == 0);
  CHECK(out.rfind("diffuse_alpha — ", 0) == 0);
  CHECK(run("paper-suite --only reconstruct --samples 2000 --out " + (kDir / "suite").string(),
            &out) == 0);
  CHECK(out.rfind("PASS reconstruct (", 0) == 0);
  CHECK(out.find(" checks)\n") == out.size() - 9);
  CHECK(std::count(out.begin(), out.end(), '\n') == 1);
  CHECK(fs::exists(kDir / "suite" / "reconstruct.json"));
  CHECK(run("--version", &out) == 0);
  CHECK(out.find("0.1.0") != std::string::npos);
  fs::remove_all(kDir);
}
