#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "swapzon/swapzon.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  swz_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::string(swz_version()) == "0.1.0");
  swz_model* m = nullptr;
  CHECK(swz_model_create("\"nope\"", 1, &m) == SWZ_ERR_CONFIG);
  CHECK(m == nullptr);
  CHECK(std::string(swz_last_error()).find("nope") != std::string::npos);
  CHECK(swz_model_create("{\"name\": \"poisson\", \"params\": {\"rate\": -1}}", 1, &m) ==
        SWZ_ERR_ARGUMENT);
  CHECK(swz_model_create("{", 1, &m) == SWZ_ERR_CONFIG);
  CHECK(swz_model_create(nullptr, 1, &m) == SWZ_ERR_ARGUMENT);
}

TEST_CASE("interval sets") {
  const double lo[] = {3.0, 0.0, 1.0};
  const double hi[] = {INFINITY, 1.0, 2.0};
  swz_interval_set* s = nullptr;
  REQUIRE(swz_interval_set_create(lo, hi, 3, &s) == SWZ_OK);
  CHECK(swz_interval_set_size(s) == 2);
  double a = 0, b = 0;
  CHECK(swz_interval_set_get(s, 0, &a, &b) == SWZ_OK);
  CHECK(a == 0.0);
  CHECK(b == 2.0);
  CHECK(swz_interval_set_get(s, 2, &a, &b) == SWZ_ERR_ARGUMENT);
  CHECK(std::isinf(swz_interval_set_lebesgue(s)));

  swz_interval_set* p = nullptr;
  REQUIRE(swz_interval_set_prefix(s, 4.5, &p) == SWZ_OK);
  char* text = nullptr;
  REQUIRE(swz_interval_set_to_json(p, &text) == SWZ_OK);
  CHECK(take(text) == "[[0.0,2.0],[3.0,5.5]]");

  swz_interval_set* j = nullptr;
  REQUIRE(swz_interval_set_from_json("[[1, 4]]", &j) == SWZ_OK);
  swz_interval_set* d = nullptr;
  REQUIRE(swz_interval_set_combine(p, j, SWZ_DIFFERENCE, &d) == SWZ_OK);
  CHECK(swz_interval_set_lebesgue(d) == doctest::Approx(2.5));
  CHECK(swz_interval_set_combine(p, j, static_cast<swz_set_op>(9), &d) == SWZ_ERR_ARGUMENT);
  CHECK(swz_interval_set_from_json("[[2, 1]]", &j) == SWZ_ERR_ARGUMENT);

  swz_interval_set_free(s);
  swz_interval_set_free(p);
  swz_interval_set_free(j);
  swz_interval_set_free(d);
}

TEST_CASE("sampling") {
  swz_model* m = nullptr;
  REQUIRE(swz_model_create("\"three_value\"", 1, &m) == SWZ_OK);
  CHECK(swz_model_is_measure(m) == 0);
  std::vector<double> v(4);
  double aux = 0, w = 0;
  REQUIRE(swz_sample_sequence(m, 4, 9, 0, v.data(), &aux, &w) == SWZ_OK);
  CHECK(v[0] == 1.0);
  for (double x : v) CHECK((x == aux || x == 2 * aux));
  std::vector<double> again(4);
  swz_sample_sequence(m, 4, 9, 0, again.data(), nullptr, nullptr);
  CHECK(again == v);
  char* spec = nullptr;
  REQUIRE(swz_model_to_json(m, &spec) == SWZ_OK);
  CHECK(take(spec).find("three_value") != std::string::npos);

  swz_interval_set* win = nullptr;
  swz_interval_set_from_json("[[0, 5]]", &win);
  char* csv = nullptr;
  CHECK(swz_sample_measure_csv(m, win, 1, 0, &csv, nullptr, nullptr) == SWZ_ERR_ARGUMENT);
  swz_model_free(m);

  REQUIRE(swz_model_create("{\"name\": \"poisson\", \"params\": {\"rate\": 2}}", 1, &m) == SWZ_OK);
  CHECK(swz_model_is_measure(m) == 1);
  REQUIRE(swz_sample_measure_csv(m, win, 1, 0, &csv, &aux, &w) == SWZ_OK);
  CHECK(take(csv).rfind("diffuse_coeff,0\nlocation,mass\n", 0) == 0);
  CHECK(aux == 2.0);
  CHECK(swz_sample_sequence(m, 3, 1, 0, v.data(), nullptr, nullptr) == SWZ_ERR_ARGUMENT);
  swz_model_free(m);
  swz_interval_set_free(win);
}

TEST_CASE("zonoid functional") {
  swz_model* m = nullptr;
  REQUIRE(swz_model_create("\"three_value\"", 1, &m) == SWZ_OK);
  const double u[] = {1.0, -1.0};
  swz_estimate e{};
  REQUIRE(swz_zonoid_functional(m, u, 2, nullptr, 50000, 3, 2, &e) == SWZ_OK);
  CHECK(std::fabs(e.value - 1.0 / 3.0) < 4 * e.se);
  CHECK(e.n_samples == 50000);
  swz_model_free(m);

  REQUIRE(swz_model_create("\"poisson\"", 1, &m) == SWZ_OK);
  swz_interval_set *a = nullptr, *b = nullptr;
  swz_interval_set_from_json("[[0, 1]]", &a);
  swz_interval_set_from_json("[[1, 3]]", &b);
  const swz_interval_set* sets[] = {a, b};
  const double ones[] = {1.0, 1.0};
  REQUIRE(swz_zonoid_functional(m, ones, 2, sets, 20000, 3, 1, &e) == SWZ_OK);
  CHECK(std::fabs(e.value - 3.0) < 4 * e.se);
  CHECK(swz_zonoid_functional(m, ones, 2, nullptr, 10, 3, 1, &e) == SWZ_ERR_ARGUMENT);
  swz_model_free(m);
  swz_interval_set_free(a);
  swz_interval_set_free(b);
}

TEST_CASE("configs and listing") {
  char* list = nullptr;
  REQUIRE(swz_list_models(&list) == SWZ_OK);
  CHECK(take(list).find("lognormal") != std::string::npos);

  const fs::path out = fs::temp_directory_path() / "swapzon_test_capi";
  fs::remove_all(out);
  char* manifest = nullptr;
  CHECK(swz_run_config_json(R"({"kind": "exch-test", "model": "sym_three_value", "k": 2, "N": 3000})",
                            out.c_str(), 1, &manifest) == SWZ_REJECT);
  CHECK(take(manifest).find("\"reject\"") != std::string::npos);
  CHECK(swz_run_config_json(R"({"kind": "swap-test", "model": "sym_three_value", "n": 2, "N": 3000})",
                            out.c_str(), 1, nullptr) == SWZ_OK);
  CHECK(swz_run_config_json("{\"kind\":", out.c_str(), 1, nullptr) == SWZ_ERR_CONFIG);
  CHECK(std::string(swz_last_error()).find("malformed") != std::string::npos);
  CHECK(swz_run_config_file((out / "absent.json").c_str(), out.c_str(), 1, nullptr) ==
        SWZ_ERR_CONFIG);
  fs::remove_all(out);
}

namespace {
void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }
}  // namespace

TEST_CASE("suite through the C API") {
  swz_suite_options o;
  swz_suite_options_init(&o);
  CHECK(o.seed != 0);
  o.only = "three-value,reconstruct";
  o.samples = 5000;
  std::vector<std::string> lines;
  CHECK(swz_paper_suite(&o, collect, &lines) == SWZ_OK);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].rfind("PASS three-value", 0) == 0);
  o.only = "nope";
  CHECK(swz_paper_suite(&o, nullptr, nullptr) == SWZ_ERR_CONFIG);
}
