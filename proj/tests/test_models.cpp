#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "errors.hpp"
#include "models.hpp"

using namespace swapzon;
using nlohmann::json;

namespace {

using Pmf = std::map<std::vector<double>, double>;

Pmf as_map(const ExactPmf& p) {
  Pmf out;
  for (std::size_t i = 0; i < p.support.size(); ++i) out[p.support[i]] += p.probs[i];
  return out;
}

// Enumerates base outcomes with their Q-probabilities; xi = X * base, dP = dQ / (c |X|).
template <class X>
Pmf change_of_measure_oracle(const std::vector<double>& levels, std::size_t n, X x_of, double c) {
  Pmf out;
  std::size_t count = 1;
  for (std::size_t j = 0; j < n; ++j) count *= levels.size();
  const double q = 1.0 / double(count);
  for (std::size_t code = 0; code < count; ++code) {
    std::vector<double> eta(n);
    std::size_t r = code;
    for (std::size_t j = 0; j < n; ++j) {
      eta[j] = levels[r % levels.size()];
      r /= levels.size();
    }
    const double x = x_of(eta);
    std::vector<double> xi(n);
    for (std::size_t j = 0; j < n; ++j) xi[j] = x * eta[j];
    out[xi] += q / (c * std::fabs(x));
  }
  return out;
}

void check_same(const Pmf& a, const Pmf& b) {
  double total = 0.0;
  for (const auto& [k, v] : a) {
    total += v;
    const auto it = b.find(k);
    const double other = it == b.end() ? 0.0 : it->second;
    CHECK(v == doctest::Approx(other).epsilon(1e-12));
  }
  for (const auto& [k, v] : b) CHECK(a.count(k) == 1);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

struct WeightedMean {
  double sum = 0, sumsq = 0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return sum / double(n); }
  double se() const {
    const double m = mean();
    return std::sqrt((sumsq / double(n) - m * m) / double(n - 1));
  }
};

}  // namespace

TEST_CASE("three_value exact pmf matches direct enumeration") {
  const SequenceModel m = builtin_sequence({"three_value", json::object()});
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto exact = m.exact_pmf(n);
    REQUIRE(exact);
    // eta uniform on {1,2}^n, X = 1/eta_1, c = E|1/X| = 3/2
    const Pmf oracle = change_of_measure_oracle(
        {1.0, 2.0}, n, [](const std::vector<double>& e) { return 1.0 / e[0]; }, 1.5);
    check_same(as_map(*exact), oracle);
  }
  const auto two = m.exact_pmf(2);
  CHECK(two->marginal(1, 1.0) == doctest::Approx(0.5));
  CHECK(two->marginal(1, 0.5) == doctest::Approx(1.0 / 3.0));
  CHECK(two->marginal(1, 2.0) == doctest::Approx(1.0 / 6.0));
  CHECK(two->marginal(0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("sym_three_value exact pmf matches direct enumeration") {
  const SequenceModel m = builtin_sequence({"sym_three_value", json::object()});
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto exact = m.exact_pmf(n);
    REQUIRE(exact);
    const Pmf oracle = change_of_measure_oracle(
        {-1.0, 0.0, 1.0}, n, [](const std::vector<double>& r) { return 1.0 + std::fabs(r[0]); },
        2.0 / 3.0);
    check_same(as_map(*exact), oracle);
  }
  const auto two = m.exact_pmf(2);
  CHECK(two->marginal(0, 0.0) == doctest::Approx(0.5));
  CHECK(two->marginal(1, 0.0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("weighted sampling reproduces the three_value marginals") {
  const SequenceModel m = builtin_sequence({"three_value", json::object()});
  WeightedMean half, one, weight;
  for (std::uint64_t i = 0; i < 60000; ++i) {
    Stream s({1, 0, i});
    const auto d = m.sample(2, s);
    CHECK(d.values[0] == 1.0);
    half.add(d.values[1] == 0.5 ? d.weight : 0.0);
    one.add(d.values[1] == 1.0 ? d.weight : 0.0);
    weight.add(d.weight);
  }
  CHECK(std::fabs(half.mean() - 1.0 / 3.0) < 4 * half.se());
  CHECK(std::fabs(one.mean() - 0.5) < 4 * one.se());
  CHECK(std::fabs(weight.mean() - 1.0) < 4 * weight.se());
}

TEST_CASE("iid models") {
  const SequenceModel normal = builtin_sequence({"iid", json::object()});
  CHECK_FALSE(normal.exact_pmf(2));
  Stream s({3, 0, 0});
  const auto draw = normal.sample(5, s);
  CHECK(draw.values.size() == 5);
  CHECK(draw.weight == 1.0);
  CHECK(draw.aux_x == 1.0);

  const SequenceModel bern = builtin_sequence({"iid", {{"dist", "bernoulli"}, {"p", 0.25}}});
  CHECK(bern.nonnegative());
  const auto pmf = bern.exact_pmf(3);
  REQUIRE(pmf);
  CHECK(pmf->marginal(2, 1.0) == doctest::Approx(0.25));

  const SequenceModel scaled = builtin_sequence({"iid", {{"scales", {1.0, 2.0}}}});
  CHECK_FALSE(scaled.exact_pmf(2));
  WeightedMean a, b;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    Stream r({4, 0, i});
    const auto d = scaled.sample(3, r);
    a.add(std::fabs(d.values[0]));
    b.add(std::fabs(d.values[1]));
  }
  CHECK(std::fabs(b.mean() - 2 * std::sqrt(2 / M_PI)) < 4 * b.se());
  CHECK(std::fabs(a.mean() - std::sqrt(2 / M_PI)) < 4 * a.se());

  const SequenceModel constant = builtin_sequence({"iid", {{"dist", "constant"}, {"value", 3.0}}});
  Stream r({5, 0, 0});
  CHECK(constant.sample(4, r).values == std::vector<double>(4, 3.0));
}

TEST_CASE("iid_divide with an estimated constant") {
  const SequenceModel m =
      builtin_sequence({"iid_divide", {{"dist", "normal"}, {"c", "estimate"}}}, SimContext{9, 0, 1});
  const double c = m.spec().params.at("c").get<double>();
  const double se = m.spec().params.at("c_estimate_se").get<double>();
  CHECK(std::fabs(c - std::sqrt(2 / M_PI)) < 4 * se);
  Stream s({2, 0, 0});
  const auto d = m.sample(3, s);
  CHECK(d.values[0] == doctest::Approx(1.0));
}

TEST_CASE("lognormal construction") {
  const SequenceModel m = builtin_sequence({"lognormal", json::object()});
  CHECK(m.spec().params.at("b") == json({0.3, 0.1}));
  WeightedMean x1, x3, ax;
  for (std::uint64_t i = 0; i < 50000; ++i) {
    Stream s({6, 0, i});
    const auto d = m.sample(3, s);
    for (double v : d.values) REQUIRE(v > 0.0);
    x1.add(d.values[0]);
    x3.add(d.values[2]);
    ax.add(d.aux_x);
  }
  // E exp(N(m, v)) = exp(m + v/2) = 1 by the choice of shift
  CHECK(std::fabs(x1.mean() - 1.0) < 4 * x1.se());
  CHECK(std::fabs(x3.mean() - 1.0) < 4 * x3.se());
  CHECK(std::fabs(ax.mean() - 1.0) < 4 * ax.se());
}

TEST_CASE("poisson counts") {
  const MeasureModel m = builtin_measure({"poisson", {{"rate", 2.0}}});
  const auto window = IntervalSet::normalize({{0, 1}, {4, 5.5}});
  WeightedMean count;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    Stream s({7, 0, i});
    const auto d = m.sample(window, s);
    count.add(evaluate(d, window));
    for (const auto& a : d.realization.atoms()) REQUIRE(window.contains(a.location));
  }
  CHECK(std::fabs(count.mean() - 5.0) < 4 * count.se());
  CHECK(count.se() * count.se() * 19999 == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("poisson_scaled weights and density") {
  const MeasureModel m = builtin_measure({"poisson_scaled", json::object()});
  CHECK(m.spec().params.at("c").get<double>() == doctest::Approx((1 + std::exp(-1.0)) / 2));
  const auto window = IntervalSet::single(0, 2);
  WeightedMean w, k0;
  for (std::uint64_t i = 0; i < 40000; ++i) {
    Stream s({8, 0, i});
    const auto d = m.sample(window, s);
    const double base_k = evaluate(d, IntervalSet::single(0, 1)) / d.aux_x;
    CHECK(d.aux_x == (base_k > 0 ? 2.0 : 1.0));
    w.add(d.weight);
    k0.add(base_k == 0 ? d.weight : 0.0);
  }
  CHECK(std::fabs(w.mean() - 1.0) < 4 * w.se());
  CHECK(std::fabs(k0.mean() - 2 / (1 + std::exp(1.0))) < 4 * k0.se());

  CHECK_THROWS_AS(builtin_measure({"poisson_scaled", {{"K", json::parse("[[0, 2]]")}}}), DomainError);
  CHECK_THROWS_AS(builtin_measure({"poisson_scaled", {{"L", json::parse("[[0.5, 1.5]]")}}}),
                  DomainError);
}

TEST_CASE("diffuse alpha") {
  const MeasureModel m = builtin_measure({"diffuse_alpha", {{"alpha", 3.0}}});
  CHECK_FALSE(m.atomic());
  Stream s({1, 0, 0});
  const auto d = m.sample(IntervalSet::single(0, 1), s);
  CHECK(evaluate(d, IntervalSet::normalize({{5, 6.5}, {10, 11}})) == 7.5);
}

TEST_CASE("realizations") {
  const MeasureRealization r({{0.5, 1.0}, {1.5, 2.0}, {3.0, 0.5}}, 0.25);
  CHECK(r.atom_mass(0.0, 2.0) == 3.0);
  CHECK(r.atom_mass(1.5, 3.0) == 2.0);
  CHECK(evaluate(r, IntervalSet::single(0, 4)) == 4.5);
  CHECK(evaluate(r.scaled(2.0), IntervalSet::single(0, 4)) == 9.0);
  CHECK_THROWS_AS(MeasureRealization({{1.0, 1.0}, {0.5, 1.0}}, 0.0), DomainError);
  CHECK_THROWS_AS(MeasureRealization({{1.0, -1.0}}, 0.0), DomainError);
  std::ostringstream out;
  write_realization_csv(out, r);
  CHECK(out.str() == "diffuse_coeff,0.25\nlocation,mass\n0.5,1\n1.5,2\n3,0.5\n");
}

TEST_CASE("evaluation outside the window is an error") {
  const MeasureModel m = builtin_measure({"poisson", json::object()});
  Stream s({2, 0, 0});
  const auto d = m.sample(IntervalSet::single(0, 1), s);
  CHECK_THROWS_AS(evaluate(d, IntervalSet::single(0.5, 2)), DomainError);
  CHECK_THROWS_AS(m.sample(IntervalSet::half_line(), s), DomainError);
}

TEST_CASE("change of measure validates X") {
  const SequenceModel base = builtin_sequence({"iid", {{"dist", "bernoulli"}}});
  const SequenceModel m =
      swap_from_base(base, {"eta_1", [](const SequenceSample& s) { return s.values[0]; }, 1}, 0.5);
  bool threw = false;
  for (std::uint64_t i = 0; i < 50 && !threw; ++i) {
    Stream s({1, 0, i});
    try {
      (void)m.sample(2, s);
    } catch (const DomainError&) {
      threw = true;
    }
  }
  CHECK(threw);
  CHECK_THROWS_AS(
      swap_from_base(base, {"one", [](const SequenceSample&) { return 1.0; }, 1}, 0.0), DomainError);
}

TEST_CASE("catalog and spec errors") {
  const auto& c = catalog();
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i - 1].name < c[i].name);
  for (const char* name : {"diffuse_alpha", "iid", "iid_divide", "lognormal", "poisson",
                           "poisson_scaled", "sym_three_value", "three_value"}) {
    CHECK(std::any_of(c.begin(), c.end(), [&](const CatalogEntry& e) { return e.name == name; }));
  }
  CHECK_THROWS_AS(builtin({"nope", json::object()}), ConfigError);
  CHECK_THROWS_AS(builtin({"poisson", {{"rat", 1}}}), DomainError);
  CHECK_THROWS_AS(builtin({"poisson", {{"rate", -1}}}), DomainError);
  CHECK_THROWS_AS(builtin_sequence({"poisson", json::object()}), ConfigError);
  CHECK_THROWS_AS(builtin_measure({"three_value", json::object()}), ConfigError);
  CHECK_THROWS_AS(json::parse("{\"params\": {}}").get<ModelSpec>(), ConfigError);
}
