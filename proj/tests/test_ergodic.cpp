#include <cmath>
#include <vector>

#include "doctest.h"
#include "ergodic.hpp"
#include "errors.hpp"
#include "models.hpp"

using namespace swapzon;
using nlohmann::json;

namespace {

// E|N - mu| / mu for N ~ Poisson(mu), by direct summation of the pmf.
double poisson_relative_mad(double mu) {
  double acc = 0.0;
  const auto top = static_cast<std::size_t>(mu + 40.0 * std::sqrt(mu) + 40.0);
  for (std::size_t k = 0; k <= top; ++k) {
    const double logp = double(k) * std::log(mu) - mu - std::lgamma(double(k) + 1.0);
    acc += std::exp(logp) * std::fabs(double(k) - mu);
  }
  return acc / mu;
}

std::vector<double> random_values(Stream& g, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = g.normal() * (1.0 + 3.0 * g.uniform());
  return v;
}

}  // namespace

TEST_CASE("partial means and running norms") {
  const SequenceSample s{{2.0, -4.0, 6.0, 0.0}, 1.0, 1.0};
  CHECK(sequence_ergodic_path(s) == std::vector<double>{2.0, -1.0, 4.0 / 3.0, 1.0});
  CHECK(p_norm_path(s, kInf) == std::vector<double>{2.0, 4.0, 6.0, 6.0});
  const auto l2 = p_norm_path(s, 2.0);
  CHECK(l2[1] == doctest::Approx(std::sqrt(10.0)));
  CHECK(l2[3] == doctest::Approx(std::sqrt(14.0)));
  CHECK_THROWS_AS(p_norm_path(s, 0.5), DomainError);
}

TEST_CASE("running norms increase with p") {
  Stream g({31, 0, 0});
  const std::vector<double> ps{1.0, 1.5, 2.0, 3.0, 8.0, kInf};
  for (int trial = 0; trial < 100; ++trial) {
    const SequenceSample s{random_values(g, 1 + g.below(50)), 1.0, 1.0};
    for (std::size_t i = 1; i < ps.size(); ++i) {
      const auto lo = p_norm_path(s, ps[i - 1]);
      const auto hi = p_norm_path(s, ps[i]);
      for (std::size_t n = 0; n < lo.size(); ++n) CHECK(lo[n] <= hi[n] * (1 + 1e-12));
    }
  }
}

TEST_CASE("tail oscillation") {
  const std::vector<double> path{5.0, 1.0, 3.0, 2.5, 2.0};
  const std::vector<std::size_t> n0{1, 2, 4, 5};
  CHECK(tail_oscillation(path, n0) == std::vector<double>{3.0, 1.0, 0.5, 0.0});
}

TEST_CASE("ergodic paths of measures") {
  const auto ms = mu_sequence(IntervalSet::half_line(), 1.5, 40);
  SUBCASE("diffuse model is constant") {
    Stream s({1, 0, 0});
    const ErgodicPath p = ergodic_path(builtin_measure({"diffuse_alpha", {{"alpha", 2.0}}}), ms, s);
    REQUIRE(p.ratios.size() == 40);
    for (double r : p.ratios) CHECK(r == 2.0);
    CHECK(p.aux_x == 2.0);
  }
  SUBCASE("constant increments average the increment ratios") {
    const MeasureModel m = builtin_measure({"poisson", {{"rate", 3.0}}});
    const auto deltas = delta_increments(ms);
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      Stream s({2, 0, rep});
      const MeasureSample draw = m.sample(ms.last(), s);
      const ErgodicPath p = ergodic_path(draw, ms);
      double acc = 0.0;
      for (std::size_t n = 0; n < deltas.size(); ++n) {
        acc += evaluate(draw, deltas[n]) / 1.5;
        CHECK(p.ratios[n] == doctest::Approx(acc / double(n + 1)).epsilon(1e-12));
        CHECK(p.mu_values[n] == doctest::Approx(1.5 * double(n + 1)));
      }
    }
  }
  SUBCASE("window too small") {
    Stream s({3, 0, 0});
    const MeasureModel m = builtin_measure({"poisson", json::object()});
    const MeasureSample draw = m.sample(IntervalSet::single(0, 3), s);
    CHECK_THROWS_AS(ergodic_path(draw, ms), DomainError);
  }
}

TEST_CASE("eta extraction recombines to the sample") {
  const MeasureModel m = builtin_measure({"poisson_scaled", json::object()});
  const std::vector<IntervalSet> sets{IntervalSet::single(0, 1), IntervalSet::single(1, 2),
                                      IntervalSet::single(5, 6)};
  const IntervalSet all = set_union(set_union(sets[0], sets[1]), sets[2]);
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    Stream s({4, 0, rep});
    const MeasureSample draw = m.sample(all, s);
    const RepresentationCheck c = extract_eta(draw, sets);
    double total = 0.0;
    for (double e : c.eta_values) total += e * draw.aux_x;
    CHECK(total == doctest::Approx(evaluate(draw, all)));
    CHECK(c.q_weight == doctest::Approx(draw.weight * draw.aux_x));
  }
  const SequenceSample seq{{3.0, 6.0, 9.0}, 3.0, 0.5};
  const RepresentationCheck c = extract_eta(seq, 2);
  CHECK(c.eta_values == std::vector<double>{1.0, 2.0});
  CHECK(c.q_weight == 1.5);
  CHECK(extract_eta(seq, 2, 0.0).eta_values == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(extract_eta(seq, 2, -1.0), DomainError);
  const std::vector<IntervalSet> uneven{IntervalSet::single(0, 1), IntervalSet::single(1, 3)};
  Stream s({5, 0, 0});
  CHECK_THROWS_AS(extract_eta(m.sample(IntervalSet::single(0, 3), s), uneven), DomainError);
}

TEST_CASE("q-weight normalization") {
  std::vector<RepresentationCheck> c{{{}, 1.0}, {{}, 3.0}};
  CHECK(normalize_q_weights(c) == 2.0);
  CHECK(c[0].q_weight == 0.5);
  CHECK(c[1].q_weight == 1.5);
  std::vector<RepresentationCheck> zero{{{}, 0.0}};
  CHECK_THROWS_AS(normalize_q_weights(zero), DomainError);
}

TEST_CASE("L1 convergence matches the Poisson oracle") {
  const auto ms = mu_sequence(IntervalSet::half_line(), 1.0, 1000);
  const std::vector<std::size_t> checkpoints{10, 100, 1000};
  const L1Result r = l1_convergence(builtin_measure({"poisson", json::object()}), ms, checkpoints,
                                    4000, SimContext{32, 0, 1});
  REQUIRE(r.errors.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.mu[i] == double(checkpoints[i]));
    const double oracle = poisson_relative_mad(double(checkpoints[i]));
    INFO("n " << checkpoints[i] << " value " << r.errors[i].value << " oracle " << oracle);
    CHECK(std::fabs(r.errors[i].value - oracle) < 4 * r.errors[i].se);
  }
  CHECK(r.trend.passed());
  CHECK(r.trend.threshold == 0.0);
  CHECK_THROWS_AS(l1_convergence(builtin_measure({"poisson", json::object()}), ms,
                                 std::vector<std::size_t>{10, 10}, 10, SimContext{}),
                  DomainError);
}

TEST_CASE("L1 convergence of partial means") {
  const std::vector<std::size_t> lengths{4, 16, 64};
  // aux_x is 1, which is the limit only when the mean is 1
  const L1Result r = l1_convergence(builtin_sequence({"iid", {{"mean", 1.0}}}), lengths, 20000,
                                    SimContext{33, 0, 1});
  for (std::size_t i = 0; i < 3; ++i) {
    const double oracle = std::sqrt(2.0 / (M_PI * double(lengths[i])));
    CHECK(std::fabs(r.errors[i].value - oracle) < 4 * r.errors[i].se);
  }
  CHECK(r.trend.passed());
}

TEST_CASE("representation checks") {
  const SimContext ctx{34, 0, 1};
  SUBCASE("lognormal with the auxiliary limit") {
    const RepresentationResult r =
        verify_representation(builtin_sequence({"lognormal", json::object()}), 3, std::nullopt,
                              5000, ctx);
    CHECK(r.exchangeability.passed());
    // the Q-density is X itself, far from unit weights
    CHECK_FALSE(r.q_vs_base.passed());
    CHECK(r.q_mean_raw == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("sym_three_value with the 1-norm limit") {
    const RepresentationResult r = verify_representation(
        builtin_sequence({"sym_three_value", json::object()}), 3, 1.0, 5000, ctx);
    CHECK(r.exchangeability.passed());
    CHECK(r.q_vs_base.passed());
  }
  SUBCASE("sym_three_value with the max limit") {
    const RepresentationResult r = verify_representation(
        builtin_sequence({"sym_three_value", json::object()}), 3, kInf, 5000, ctx);
    CHECK(r.exchangeability.passed());
  }
  SUBCASE("terminal partial means") {
    RepresentationOptions o;
    o.source = LimitSource::TerminalRatio;
    o.terminal_length = 2000;
    const RepresentationResult r = verify_representation(
        builtin_sequence({"iid", {{"mean", 2.0}}}), 2, std::nullopt, 1000, ctx, o);
    CHECK(r.exchangeability.passed());
    REQUIRE(r.limit_bias);
    // terminal partial mean near 2 against aux_x = 1
    CHECK(std::fabs(*r.limit_bias - 1.0) < 0.01);
  }
  SUBCASE("measure form") {
    const std::vector<IntervalSet> sets{IntervalSet::single(0, 1), IntervalSet::single(1, 2),
                                        IntervalSet::single(2, 3)};
    const RepresentationResult r =
        verify_representation(builtin_measure({"poisson", {{"rate", 4.0}}}), sets, 3000, ctx);
    CHECK(r.exchangeability.passed());
    CHECK(r.q_vs_base.passed());
    CHECK(r.q_mean_raw == doctest::Approx(4.0));
  }
}

TEST_CASE("limits agree across mu-sequences") {
  const SimContext ctx{35, 0, 1};
  const MeasureModel m = builtin_measure({"poisson", json::object()});
  const auto a = mu_sequence(IntervalSet::half_line(), 10.0, 50);
  const auto b = MuSequence::from_sets(
      {IntervalSet::single(0, 50), IntervalSet::normalize({{0, 50}, {100, 200}}),
       IntervalSet::normalize({{0, 50}, {100, 600}})});
  const TestReport r = exchangeable_ergodic(m, a, b, 300, ctx);
  CHECK(r.passed());
  CHECK(r.threshold > 0.0);
  CHECK_THROWS_AS(exchangeable_ergodic(m, b, a, 10, ctx), DomainError);
}
