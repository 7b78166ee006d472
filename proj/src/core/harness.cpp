#include "harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ergodic.hpp"
#include "errors.hpp"
#include "estimate.hpp"
#include "format.hpp"
#include "interval_set.hpp"
#include "models.hpp"
#include "zonoid_stats.hpp"

namespace swapzon {

using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string report_csv(const TestReport& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  return out.str();
}

std::string estimates_csv(const std::vector<std::string>& ids, const std::vector<Estimate>& e) {
  std::ostringstream out;
  write_estimates_csv(out, ids, e);
  return out.str();
}

// --- config parsing --------------------------------------------------------

ModelSpec parse_model(const json& j) {
  if (j.is_string()) return {j.get<std::string>(), json::object()};
  return j.get<ModelSpec>();
}

template <class T>
T field(const json& exp, const char* key, T fallback) {
  if (!exp.contains(key)) return fallback;
  try {
    return exp.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field \"") + key + "\" has the wrong type");
  }
}

template <class T>
T required(const json& exp, const char* key) {
  if (!exp.contains(key)) throw ConfigError(std::string("missing field \"") + key + "\"");
  return field<T>(exp, key, T{});
}

std::vector<IntervalSet> parse_sets(const json& exp) {
  if (!exp.contains("sets")) throw ConfigError("missing field \"sets\"");
  const json& s = exp.at("sets");
  if (!s.is_array() || s.empty()) throw ConfigError("\"sets\" must be a nonempty array");
  std::vector<IntervalSet> out;
  for (const auto& item : s) out.push_back(item.get<IntervalSet>());
  return out;
}

double parse_p(const json& j) {
  if (j.is_string() && (j == "inf" || j == "infinity")) return kInf;
  if (!j.is_number()) throw ConfigError("\"p\" must be a number or \"inf\"");
  return j.get<double>();
}

std::vector<std::vector<double>> parse_grid(const json& exp) {
  if (!exp.contains("u_grid")) return {};
  return field<std::vector<std::vector<double>>>(exp, "u_grid", {});
}

std::size_t parse_draws(const json& exp) {
  const auto n = field<std::int64_t>(exp, "N", 10000);
  if (n < 100) throw ConfigError("\"N\" must be at least 100");
  return static_cast<std::size_t>(n);
}

double parse_threshold(const json& exp, double fallback) {
  const double t = field<double>(exp, "threshold", fallback);
  if (!(t > 0.0)) throw ConfigError("\"threshold\" must be positive");
  return t;
}

ExchangeabilityOptions parse_exch(const json& exp) {
  ExchangeabilityOptions o;
  o.alpha = field<double>(exp, "alpha", o.alpha);
  o.resamples = field<std::size_t>(exp, "resamples", o.resamples);
  o.energy_subsample = field<std::size_t>(exp, "energy_subsample", o.energy_subsample);
  return o;
}

const SequenceModel& need_sequence(const Model& m, const std::string& kind) {
  if (!std::holds_alternative<SequenceModel>(m)) {
    throw ConfigError("experiment \"" + kind + "\" needs a sequence model here");
  }
  return std::get<SequenceModel>(m);
}

const MeasureModel& need_measure(const Model& m, const std::string& kind) {
  if (!std::holds_alternative<MeasureModel>(m)) {
    throw ConfigError("experiment \"" + kind + "\" needs a measure model here");
  }
  return std::get<MeasureModel>(m);
}

std::string pmf_csv(const JointPmf& p) {
  std::string out = csv_row({"pattern", "probability", "se"});
  const std::size_t S = p.probs.size();
  for (std::size_t m = 0; m < S; ++m) {
    std::string pattern;
    for (std::size_t j = 0; j < p.n; ++j) {
      if (j) pattern += ';';
      pattern += format_double((m >> j) & 1 ? p.b : p.a);
    }
    const std::string se =
        p.covariance.empty() ? "" : format_double(std::sqrt(std::max(0.0, p.covariance[m * S + m])));
    out += csv_row({pattern, format_double(p.probs[m]), se});
  }
  return out;
}

std::string path_csv(const ErgodicPath& path) {
  std::string out = csv_row({"n", "mu", "ratio", "aux_x"});
  for (std::size_t i = 0; i < path.ratios.size(); ++i) {
    out += csv_row({std::to_string(i + 1), format_double(path.mu_values[i]),
                    format_double(path.ratios[i]), format_double(path.aux_x)});
  }
  return out;
}

std::vector<std::size_t> default_checkpoints(std::size_t n) {
  std::vector<std::size_t> c;
  for (std::size_t p = 10; p < n; p *= 10) c.push_back(p);
  c.push_back(n);
  return c;
}

void put_report(ExperimentResult& r, const std::string& stem, const TestReport& report) {
  r.summary["report"] = report;
  r.summary["statistic"] = report.statistic;
  r.summary["threshold"] = report.threshold;
  r.pass = r.pass && report.passed();
  r.files[stem + ".csv"] = report_csv(report);
}

}  // namespace

ExperimentResult run_experiment(const json& exp, std::size_t index, std::uint64_t master_seed,
                                unsigned threads) {
  if (!exp.is_object()) throw ConfigError("experiment must be a JSON object");
  const std::string kind = required<std::string>(exp, "kind");
  if (!exp.contains("model")) throw ConfigError("missing field \"model\"");
  const ModelSpec spec = parse_model(exp.at("model"));
  const std::uint64_t seed = field<std::uint64_t>(exp, "master_seed", master_seed);
  const SimContext ctx{seed, index, threads};
  const Model model = builtin(spec, ctx.derive(lane_tag::kPrepass));
  const bool is_measure = std::holds_alternative<MeasureModel>(model);
  const std::size_t N = parse_draws(exp);

  ExperimentResult r;
  r.kind = kind;
  const std::string stem = "exp" + std::to_string(index) + "_" + kind;
  r.summary = json{{"index", index}, {"kind", kind}, {"model", spec}, {"N", N}, {"master_seed", seed}};

  if (kind == "zonoid") {
    const auto u = required<std::vector<double>>(exp, "u");
    const Estimate e = is_measure
                           ? zonoid_functional_sets(need_measure(model, kind), parse_sets(exp), u, N, ctx)
                           : zonoid_functional(need_sequence(model, kind), u, N, ctx);
    r.summary["estimate"] = e;
    if (exp.contains("expected")) {
      const double expected = required<double>(exp, "expected");
      TestReport rep = make_report("zonoid-vs-expected", std::fabs(e.value - expected),
                                   parse_threshold(exp, 4.0) * e.se + 1e-12);
      rep.n_samples = e.n_samples;
      rep.ess = e.ess;
      rep.details.push_back({"zonoid", e.value, expected, e.se, z_score(e.value - expected, e.se),
                             rep.passed()});
      r.summary["report"] = rep;
      r.pass = rep.passed();
    }
    r.files[stem + ".csv"] = estimates_csv({"zonoid"}, {e});
  } else if (kind == "swap-test") {
    SwapTestOptions o;
    o.threshold = parse_threshold(exp, o.threshold);
    const TestReport rep =
        is_measure ? test_swap_invariance_sets(need_measure(model, kind), parse_sets(exp),
                                               parse_grid(exp), N, ctx, o)
                   : test_swap_invariance(need_sequence(model, kind), required<std::size_t>(exp, "n"),
                                          parse_grid(exp), N, ctx, o);
    put_report(r, stem, rep);
  } else if (kind == "exch-test") {
    const ExchangeabilityOptions o = parse_exch(exp);
    const TestReport rep =
        is_measure ? test_exchangeability_sets(need_measure(model, kind), parse_sets(exp), N, ctx, o)
                   : test_exchangeability(need_sequence(model, kind), required<std::size_t>(exp, "k"),
                                          N, ctx, o);
    put_report(r, stem, rep);
  } else if (kind == "reconstruct") {
    const auto& m = need_sequence(model, kind);
    const auto n = required<std::size_t>(exp, "n");
    const double a = field<double>(exp, "a", 0.0);
    const double b = field<double>(exp, "b", 1.0);
    const std::string mode = field<std::string>(exp, "mode", "estimated");
    JointPmf pmf;
    if (mode == "exact") {
      auto exact = m.exact_pmf(n);
      if (!exact) throw ConfigError("model has no exact pmf for this n");
      pmf = reconstruct_binary(z_table_from_pmf(*exact, n, a, b), ReconstructMode::Exact);
    } else if (mode == "estimated") {
      pmf = reconstruct_binary(estimate_z_table(m, n, a, b, N, ctx), ReconstructMode::Estimated);
    } else {
      throw ConfigError("\"mode\" must be \"exact\" or \"estimated\"");
    }
    PmfCheckOptions o;
    o.se_multiplier = parse_threshold(exp, o.se_multiplier);
    const TestReport rep = check_exchangeable_pmf(pmf, o);
    put_report(r, stem, rep);
    r.summary["clip_mass"] = pmf.clip_mass;
    r.files[stem + "_pmf.csv"] = pmf_csv(pmf);
  } else if (kind == "intensity") {
    const auto sets = parse_sets(exp);
    const IntensityResult res =
        intensity_ratio(need_measure(model, kind), sets, N, ctx, parse_threshold(exp, 4.0));
    std::vector<std::string> ids;
    for (std::size_t j = 0; j < sets.size(); ++j) ids.push_back("set" + std::to_string(j + 1));
    r.summary["ratios"] = res.ratios;
    r.summary["report"] = res.equality;
    r.summary["statistic"] = res.equality.statistic;
    r.summary["threshold"] = res.equality.threshold;
    r.pass = res.equality.passed();
    r.files[stem + ".csv"] = estimates_csv(ids, res.ratios);
  } else if (kind == "ergodic") {
    const auto n = required<std::size_t>(exp, "n");
    auto checkpoints = field<std::vector<std::size_t>>(exp, "checkpoints", default_checkpoints(n));
    L1Result l1;
    if (is_measure) {
      const auto& m = need_measure(model, kind);
      const IntervalSet region = exp.contains("region") ? exp.at("region").get<IntervalSet>()
                                                        : IntervalSet::half_line();
      const double inc = field<double>(exp, "increment", 1.0);
      const MuSequence ms = mu_sequence(region, inc, n);
      Stream first = ctx.derive(lane_tag::kDraws).stream(0);
      const ErgodicPath path = ergodic_path(m, ms, first);
      r.summary["tail_oscillation"] = tail_oscillation(path.ratios, checkpoints);
      r.summary["terminal_ratio"] = path.ratios.back();
      r.summary["aux_x"] = path.aux_x;
      r.files[stem + "_path.csv"] = path_csv(path);
      l1 = l1_convergence(m, ms, checkpoints, N, ctx);
      if (exp.contains("compare_region")) {
        const MuSequence other = mu_sequence(exp.at("compare_region").get<IntervalSet>(), inc, n);
        const TestReport uniq = exchangeable_ergodic(m, ms, other, N, ctx.derive(lane_tag::kResample));
        r.summary["uniqueness"] = uniq;
        r.pass = r.pass && uniq.passed();
      }
    } else {
      const auto& m = need_sequence(model, kind);
      Stream first = ctx.derive(lane_tag::kDraws).stream(0);
      const SequenceSample s = m.sample(n, first);
      ErgodicPath path{sequence_ergodic_path(s), {}, s.aux_x};
      for (std::size_t i = 1; i <= n; ++i) path.mu_values.push_back(double(i));
      r.summary["tail_oscillation"] = tail_oscillation(path.ratios, checkpoints);
      r.summary["terminal_ratio"] = path.ratios.back();
      r.summary["aux_x"] = path.aux_x;
      r.files[stem + "_path.csv"] = path_csv(path);
      l1 = l1_convergence(m, checkpoints, N, ctx);
    }
    std::vector<std::string> ids;
    for (std::size_t c : l1.n) ids.push_back("n=" + std::to_string(c));
    r.summary["checkpoints"] = l1.n;
    r.summary["l1_errors"] = l1.errors;
    r.summary["report"] = l1.trend;
    r.summary["statistic"] = l1.trend.statistic;
    r.summary["threshold"] = l1.trend.threshold;
    r.pass = r.pass && l1.trend.passed();
    r.files[stem + ".csv"] = estimates_csv(ids, l1.errors);
  } else if (kind == "represent") {
    RepresentationOptions o;
    o.exchangeability = parse_exch(exp);
    const std::string source = field<std::string>(exp, "source", "aux");
    if (source == "terminal") {
      o.source = LimitSource::TerminalRatio;
    } else if (source != "aux") {
      throw ConfigError("\"source\" must be \"aux\" or \"terminal\"");
    }
    o.terminal_length = field<std::size_t>(exp, "terminal_length", o.terminal_length);
    RepresentationResult res;
    if (is_measure) {
      res = verify_representation(need_measure(model, kind), parse_sets(exp), N, ctx, o);
    } else {
      std::optional<double> p;
      if (exp.contains("p")) p = parse_p(exp.at("p"));
      res = verify_representation(need_sequence(model, kind), required<std::size_t>(exp, "k"), p, N,
                                  ctx, o);
    }
    put_report(r, stem, res.exchangeability);
    r.summary["q_vs_base"] = res.q_vs_base;
    r.summary["q_mean_raw"] = res.q_mean_raw;
    if (res.limit_bias) r.summary["limit_bias"] = *res.limit_bias;
  } else {
    throw ConfigError("unknown experiment kind \"" + kind + "\"");
  }
  r.summary["verdict"] = r.pass ? "pass" : "reject";
  r.files[stem + ".json"] = dump(r.summary);
  return r;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

}  // namespace

RunResult run_config(const json& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  std::vector<json> experiments;
  if (config.contains("experiments")) {
    if (!config.at("experiments").is_array() || config.at("experiments").empty()) {
      throw ConfigError("\"experiments\" must be a nonempty array");
    }
    for (const auto& e : config.at("experiments")) experiments.push_back(e);
  } else {
    experiments.push_back(config);
  }
  const auto seed = field<std::uint64_t>(config, "master_seed", kDefaultMasterSeed);
  const unsigned threads =
      std::max(1u, options.threads.value_or(field<unsigned>(config, "threads", 1)));
  RunResult result;
  result.out_dir = options.out_dir.value_or(field<std::string>(config, "output", "swapzon-out"));

  // Run everything before touching the file system so a bad experiment
  // leaves no partial output.
  std::vector<ExperimentResult> results;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    results.push_back(run_experiment(experiments[i], i, seed, threads));
  }
  prepare_dir(result.out_dir);
  json summaries = json::array();
  for (const auto& r : results) {
    json s{{"kind", r.kind}, {"verdict", r.summary.at("verdict")}};
    for (const char* k : {"index", "model", "statistic", "threshold", "estimate"}) {
      if (r.summary.contains(k)) s[k] = r.summary.at(k);
    }
    json files = json::array();
    for (const auto& [name, contents] : r.files) {
      write_file(result.out_dir / name, contents);
      files.push_back(name);
    }
    s["files"] = files;
    summaries.push_back(s);
    result.all_pass = result.all_pass && r.pass;
  }
  result.manifest = json{{"toolkit", "swapzon"},
                         {"version", kVersion},
                         {"master_seed", seed},
                         {"config", config},
                         {"experiments", summaries},
                         {"all_pass", result.all_pass}};
  write_file(result.out_dir / "manifest.json", dump(result.manifest));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(result.out_dir / "run_info.json",
             dump(json{{"wall_time_seconds", wall}, {"threads", threads}}));
  return result;
}

RunResult run_config_file(const std::filesystem::path& path, const RunOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON config: ") + e.what());
  }
  return run_config(config, options);
}

std::string list_models_text() {
  std::string out;
  for (const auto& e : catalog()) {
    out += e.name + " — " + e.example + "\n";
    out += "    kind: " + e.kind + "\n";
    out += "    " + e.summary + "\n";
    for (const auto& [key, desc] : e.params.items()) {
      out += "    param " + key + ": " + desc.get<std::string>() + "\n";
    }
  }
  return out;
}

ExitStatus exit_status_for(const std::exception& e) {
  if (dynamic_cast<const InvariantError*>(&e)) return ExitStatus::Invariant;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    return ExitStatus::Config;
  }
  return ExitStatus::Invariant;
}

// --- acceptance suite ------------------------------------------------------

namespace {

struct CheckRow {
  std::string id;
  double value = 0.0;
  std::optional<double> target;
  double se = 0.0;
  double bound = 0.0;
  double ess = 0.0;
  std::size_t n_samples = 0;
  bool pass = true;
};

void to_json(json& j, const CheckRow& c) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); };
  j = json{{"id", c.id},       {"value", num(c.value)}, {"se", num(c.se)},
           {"bound", num(c.bound)}, {"ess", num(c.ess)}, {"n_samples", c.n_samples},
           {"verdict", c.pass ? "pass" : "reject"}};
  j["target"] = c.target ? num(*c.target) : json(nullptr);
}

CheckRow close_to(std::string id, const Estimate& e, double target, double floor = 1e-12) {
  const double bound = 4.0 * e.se + floor;
  return {std::move(id), e.value, target, e.se, bound, e.ess, e.n_samples,
          std::fabs(e.value - target) <= bound};
}

CheckRow verdict_is(std::string id, const TestReport& r, bool expect_pass) {
  return {std::move(id), r.statistic, std::nullopt, 0.0, r.threshold, r.ess, r.n_samples,
          r.passed() == expect_pass};
}

CheckRow at_most(std::string id, double value, double bound, std::size_t n) {
  return {std::move(id), value, std::nullopt, 0.0, bound, 0.0, n, value <= bound};
}

struct Criterion {
  std::vector<CheckRow> checks;
  json extra = json::object();
};

struct Sizes {
  std::size_t main, path, l1, erg;
};

Estimate indicator_mean(const WeightedData& d, std::size_t col, double value) {
  std::vector<double> terms(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    terms[i] = d.row(i)[col] == value ? d.weights[i] : 0.0;
  }
  return mean_estimate(terms, d.weights);
}

Estimate column_mean(const WeightedData& d, std::size_t col) {
  std::vector<double> terms(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) terms[i] = d.weights[i] * d.row(i)[col];
  return mean_estimate(terms, d.weights);
}

Estimate aux_mean(const WeightedData& d) {
  std::vector<double> terms(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) terms[i] = d.weights[i] * d.aux[i];
  return mean_estimate(terms, d.weights);
}

const double kE = std::numbers::e;

Criterion poisson_nonexch(const Sizes& n, const SimContext& ctx) {
  const MeasureModel m = builtin_measure({"poisson_scaled", json::object()}, ctx.derive(10));
  const std::vector<IntervalSet> sets{IntervalSet::single(0, 1), IntervalSet::single(1, 2)};
  const WeightedData d = draw_set_values(m, sets, n.main, ctx.derive(1));
  Criterion c;
  c.checks.push_back(close_to("P(xi(L)=0)", indicator_mean(d, 1, 0.0), 1.0 / kE));
  c.checks.push_back(close_to("P(xi(K)=0)", indicator_mean(d, 0, 0.0), 2.0 / (1.0 + kE)));
  const TestReport exch = exchangeability_test(d, 2, {}, ctx.derive(2));
  c.checks.push_back(verdict_is("exch-test (K,L) rejects", exch, false));
  const auto grid = default_u_grid(2, 20, ctx.derive(3));
  const TestReport swap = swap_invariance_test(d, grid, {}, ctx.derive(3));
  c.checks.push_back(verdict_is("swap-test (K,L) passes", swap, true));
  c.extra["exchangeability"] = exch;
  return c;
}

Criterion intensity(const Sizes& n, const SimContext& ctx) {
  std::vector<IntervalSet> sets;
  for (int j = 0; j < 4; ++j) sets.push_back(IntervalSet::single(j, j + 1));
  Criterion c;
  const MeasureModel scaled = builtin_measure({"poisson_scaled", json::object()}, ctx.derive(10));
  const IntensityResult rs = intensity_ratio(scaled, sets, n.main, ctx.derive(1));
  for (std::size_t j = 0; j < sets.size(); ++j) {
    c.checks.push_back(close_to("poisson_scaled ratio set" + std::to_string(j + 1), rs.ratios[j],
                                2.0 / (1.0 + 1.0 / kE)));
  }
  c.checks.push_back(verdict_is("poisson_scaled equality passes", rs.equality, true));
  const MeasureModel plain = builtin_measure({"poisson", json::object()});
  const IntensityResult rp = intensity_ratio(plain, sets, n.main, ctx.derive(2));
  for (std::size_t j = 0; j < sets.size(); ++j) {
    c.checks.push_back(close_to("poisson ratio set" + std::to_string(j + 1), rp.ratios[j], 1.0));
  }
  c.checks.push_back(verdict_is("poisson equality passes", rp.equality, true));
  return c;
}

Criterion three_value(const Sizes& n, const SimContext& ctx) {
  const SequenceModel m = builtin_sequence({"three_value", json::object()});
  Criterion c;
  const std::vector<double> u{1.0, -1.0};
  c.checks.push_back(close_to("zonoid u=(1,-1)", zonoid_functional(m, u, n.main, ctx.derive(1)), 1.0 / 3.0));
  c.checks.push_back(
      verdict_is("swap-test n=3 passes", test_swap_invariance(m, 3, {}, n.main, ctx.derive(2)), true));
  c.checks.push_back(
      verdict_is("exch-test k=2 rejects", test_exchangeability(m, 2, n.main, ctx.derive(3)), false));
  return c;
}

ExactPmf binary_pmf(std::size_t n, const std::vector<double>& probs) {
  ExactPmf p;
  for (std::size_t m = 0; m < probs.size(); ++m) {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = (m >> j) & 1 ? 1.0 : 0.0;
    p.support.push_back(std::move(x));
    p.probs.push_back(probs[m]);
  }
  return p;
}

Criterion reconstruct(const Sizes& n, const SimContext& ctx) {
  Stream rng = ctx.derive(1).stream(0);
  double max_err = 0.0;
  std::size_t exch_pass = 0;
  std::size_t nonexch_reject = 0;
  for (int kind = 0; kind < 2; ++kind) {
    for (std::size_t i = 0; i < 100; ++i) {
      const std::size_t dim = kind == 0 ? 1 + i % 4 : 2 + i % 3;
      const std::size_t S = std::size_t{1} << dim;
      std::vector<double> probs(S);
      if (kind == 0) {
        std::vector<double> cls(dim + 1);
        for (auto& g : cls) g = rng.uniform_open();
        double total = 0.0;
        for (double g : cls) total += g;
        for (std::size_t m = 0; m < S; ++m) {
          const auto k = std::size_t(std::popcount(m));
          const double binom = std::round(std::tgamma(double(dim) + 1) /
                                          (std::tgamma(double(k) + 1) * std::tgamma(double(dim - k) + 1)));
          probs[m] = cls[k] / total / binom;
        }
      } else {
        double total = 0.0;
        for (auto& p : probs) total += (p = rng.uniform_open());
        for (auto& p : probs) p /= total;
      }
      const JointPmf rec =
          reconstruct_binary(z_table_from_pmf(binary_pmf(dim, probs), dim, 0.0, 1.0), ReconstructMode::Exact);
      for (std::size_t m = 0; m < S; ++m) max_err = std::max(max_err, std::fabs(rec.probs[m] - probs[m]));
      const bool pass = check_exchangeable_pmf(rec).passed();
      if (kind == 0 && pass) ++exch_pass;
      if (kind == 1 && !pass) ++nonexch_reject;
    }
  }
  Criterion c;
  c.checks.push_back(at_most("max |reconstructed - source|", max_err, 1e-12, 200));
  c.checks.push_back({"exchangeable pmfs passing", double(exch_pass), 100.0, 0.0, 0.0, 0.0, 100,
                      exch_pass == 100});
  c.checks.push_back({"non-exchangeable pmfs rejected", double(nonexch_reject), 100.0, 0.0, 0.0, 0.0,
                      100, nonexch_reject == 100});
  const SequenceModel bern = builtin_sequence({"iid", {{"dist", "bernoulli"}}});
  const JointPmf est =
      reconstruct_binary(estimate_z_table(bern, 3, 0.0, 1.0, n.main, ctx.derive(2)), ReconstructMode::Estimated);
  c.checks.push_back(verdict_is("estimated reconstruction n=3 passes", check_exchangeable_pmf(est), true));
  return c;
}

Criterion lognormal(const Sizes& n, const SimContext& ctx) {
  const SequenceModel m = builtin_sequence({"lognormal", {{"b", {0.3, 0.1}}}});
  const WeightedData d = draw_sequences(m, 50, n.main, ctx.derive(1));
  Criterion c;
  for (std::size_t j : {1, 2, 10}) {
    c.checks.push_back(close_to("E xi_" + std::to_string(j), column_mean(d, j - 1), 1.0));
  }
  c.checks.push_back(close_to("E X", aux_mean(d), 1.0));
  const RepresentationResult rep = verify_representation(m, 3, std::nullopt, n.main, ctx.derive(2));
  c.checks.push_back(verdict_is("representation k=3 passes", rep.exchangeability, true));
  std::size_t bad = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    SequenceSample s{{d.row(i).begin(), d.row(i).end()}, d.aux[i], d.weights[i]};
    const RepresentationCheck eta = extract_eta(s, 50);
    for (std::size_t j = 0; j < 50; ++j) {
      const double x = s.values[j];
      if (std::fabs(s.aux_x * eta.eta_values[j] - x) > 2.0 * 2.220446049250313e-16 * std::fabs(x)) ++bad;
    }
  }
  c.checks.push_back({"xi_j = X eta_j violations", double(bad), 0.0, 0.0, 0.0, 0.0, d.rows(), bad == 0});
  return c;
}

Criterion pnorm(const Sizes& n, const SimContext& ctx) {
  const SequenceModel m = builtin_sequence({"sym_three_value", json::object()});
  const WeightedData d = draw_sequences(m, 2, n.main, ctx.derive(1));
  Criterion c;
  c.checks.push_back(close_to("P(xi_1=0)", indicator_mean(d, 0, 0.0), 0.5));
  c.checks.push_back(close_to("P(xi_2=0)", indicator_mean(d, 1, 0.0), 1.0 / 3.0));

  constexpr std::size_t kLen = 10000;
  struct PathRow {
    double z, w, norm;
  };
  const auto rows = simulate(n.path, ctx.derive(2), [&](std::size_t, Stream& rng) {
    const SequenceSample s = m.sample(kLen, rng);
    const double norm = p_norm_path(s, 1.0).back();
    double ss = 0.0;
    for (double v : s.values) ss += (std::fabs(v) - norm) * (std::fabs(v) - norm);
    const double se = std::sqrt(ss / double(kLen - 1) / double(kLen));
    return PathRow{z_score(norm - 2.0 / 3.0 * s.aux_x, se), s.weight, norm};
  });
  double worst = 0.0;
  std::vector<double> terms, weights;
  for (const auto& r : rows) {
    worst = std::max(worst, r.z);
    terms.push_back(r.w * r.norm);
    weights.push_back(r.w);
  }
  c.checks.push_back(at_most("max_i |norm_1 - (2/3) X| / SE_i at n=10^4", worst, 4.0, rows.size()));
  c.checks.push_back(close_to("E ||xi||_1", mean_estimate(terms, weights), 1.0));
  const RepresentationResult rep = verify_representation(m, 3, 1.0, n.main, ctx.derive(3));
  c.checks.push_back(verdict_is("representation p=1 passes", rep.exchangeability, true));
  c.checks.push_back(verdict_is("Q-weights match base weights", rep.q_vs_base, true));
  return c;
}

double poisson_mad_ratio(double n) {
  // E|N/n - 1| for N ~ Poisson(n), n a positive integer
  return std::exp(std::log(2.0) - n + (n + 1.0) * std::log(n) - std::lgamma(n + 1.0)) / n;
}

Criterion ergodic(const Sizes& n, const SimContext& ctx) {
  constexpr std::size_t kLen = 10000;
  const MuSequence ms = mu_sequence(IntervalSet::half_line(), 1.0, kLen);
  const MeasureModel poisson = builtin_measure({"poisson", json::object()});
  const MeasureModel scaled = builtin_measure({"poisson_scaled", json::object()}, ctx.derive(10));
  Criterion c;
  const IntervalSet last = ms.last();
  for (const auto* model : {&poisson, &scaled}) {
    const auto z = simulate(n.path, ctx.derive(model == &poisson ? 1 : 2), [&](std::size_t, Stream& rng) {
      const MeasureSample s = model->sample(last, rng);
      const double r = evaluate(s, last) / double(kLen);
      return std::fabs(r - s.aux_x) / (s.aux_x / std::sqrt(double(kLen)));
    });
    c.checks.push_back(at_most(model->name() + " max_i |r_n - X| / (X/sqrt(n)) at n=10^4",
                               *std::max_element(z.begin(), z.end()), 4.0, z.size()));
  }
  const std::vector<std::size_t> cps{100, 1000, 10000};
  const L1Result l1 = l1_convergence(poisson, ms, cps, n.l1, ctx.derive(3));
  for (std::size_t i = 0; i < cps.size(); ++i) {
    c.checks.push_back(close_to("poisson E|r_n - 1| n=" + std::to_string(cps[i]), l1.errors[i],
                                poisson_mad_ratio(double(cps[i]))));
  }
  c.checks.push_back(verdict_is("l1 decreasing", l1.trend, true));
  const IntervalSet gap = IntervalSet::normalize({{0, 1}, {2, kInf}});
  const MuSequence other = mu_sequence(gap, 1.0, kLen);
  c.checks.push_back(verdict_is("poisson limit uniqueness",
                                exchangeable_ergodic(poisson, ms, other, n.erg, ctx.derive(4)), true));
  c.checks.push_back(verdict_is("poisson_scaled limit uniqueness",
                                exchangeable_ergodic(scaled, ms, other, n.erg, ctx.derive(5)), true));
  return c;
}

using CriterionFn = Criterion (*)(const Sizes&, const SimContext&);

const std::vector<std::pair<std::string, CriterionFn>>& criteria_table() {
  static const std::vector<std::pair<std::string, CriterionFn>> table{
      {"poisson-nonexch", poisson_nonexch}, {"intensity", intensity}, {"three-value", three_value},
      {"reconstruct", reconstruct},         {"lognormal", lognormal}, {"pnorm", pnorm},
      {"ergodic", ergodic}};
  return table;
}

std::string checks_csv(const std::vector<CheckRow>& rows) {
  std::string out = csv_row({"check_id", "value", "target", "se", "bound", "ess", "n_samples", "verdict"});
  for (const auto& r : rows) {
    out += csv_row({r.id, format_double(r.value), r.target ? format_double(*r.target) : "",
                    format_double(r.se), format_double(r.bound), format_double(r.ess),
                    std::to_string(r.n_samples), r.pass ? "pass" : "reject"});
  }
  return out;
}

}  // namespace

const std::vector<std::string>& suite_criteria() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : criteria_table()) n.push_back(name);
    return n;
  }();
  return names;
}

SuiteResult paper_suite(const SuiteOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& name : options.only) {
    const auto& names = suite_criteria();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ConfigError("unknown criterion \"" + name + "\"");
    }
  }
  const std::size_t main = options.samples.value_or(100000);
  if (main < 2) throw ConfigError("--samples must be at least 2");
  const Sizes sizes{main, std::min<std::size_t>(main, 200), std::min<std::size_t>(main, 2000),
                    std::min<std::size_t>(main, 1000)};
  const unsigned threads = std::max(1u, options.threads);
  if (options.out_dir) prepare_dir(*options.out_dir);

  SuiteResult result;
  json criteria = json::array();
  const auto& table = criteria_table();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& [name, fn] = table[i];
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), name) == options.only.end()) {
      continue;
    }
    const Criterion c = fn(sizes, SimContext{options.seed, i + 1, threads});
    std::size_t passed = 0;
    for (const auto& row : c.checks) passed += row.pass ? 1 : 0;
    const bool ok = passed == c.checks.size();
    result.all_pass = result.all_pass && ok;
    const std::string line = std::string(ok ? "PASS " : "FAIL ") + name + " (" +
                             std::to_string(passed) + "/" + std::to_string(c.checks.size()) + " checks)";
    result.lines.push_back(line);
    if (options.on_line) options.on_line(line);
    json entry{{"name", name}, {"verdict", ok ? "pass" : "reject"}, {"checks", c.checks}};
    if (!c.extra.empty()) entry["extra"] = c.extra;
    if (options.out_dir) {
      write_file(*options.out_dir / (name + ".json"), dump(entry));
      write_file(*options.out_dir / (name + ".csv"), checks_csv(c.checks));
    }
    criteria.push_back(json{{"name", name}, {"verdict", entry["verdict"]}, {"passed", passed},
                            {"checks", c.checks.size()}});
  }
  result.manifest = json{{"toolkit", "swapzon"},
                         {"version", kVersion},
                         {"suite", "acceptance"},
                         {"master_seed", options.seed},
                         {"samples", sizes.main},
                         {"criteria", criteria},
                         {"all_pass", result.all_pass}};
  if (options.out_dir) {
    write_file(*options.out_dir / "manifest.json", dump(result.manifest));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(*options.out_dir / "run_info.json",
               dump(json{{"wall_time_seconds", wall}, {"threads", threads}}));
  }
  return result;
}

}  // namespace swapzon
