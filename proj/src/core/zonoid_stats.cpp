#include "zonoid_stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "errors.hpp"
#include "format.hpp"

namespace swapzon {
namespace {

double dot(std::span<const double> u, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += u[j] * x[j];
  return s;
}

// Mean and plug-in SE of d_i over N draws.
struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(std::span<const double> d) {
  const auto n = static_cast<double>(d.size());
  if (d.empty()) return {};
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= n;
  if (d.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

std::string perm_label(std::span<const std::size_t> perm) {
  std::string s = "(";
  for (std::size_t j = 0; j < perm.size(); ++j) {
    if (j) s += ' ';
    s += std::to_string(perm[j] + 1);
  }
  return s + ")";
}

std::string pattern_label(std::span<const double> values) {
  std::string s = "(";
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j) s += ';';
    s += format_double(values[j]);
  }
  return s + ")";
}

std::vector<double> permuted(std::span<const double> u, std::span<const std::size_t> perm) {
  std::vector<double> out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = u[perm[j]];
  return out;
}

void check_sets(std::span<const IntervalSet> sets, bool allow_null) {
  if (sets.empty()) throw DomainError("at least one set is required");
  if (!pairwise_disjoint(sets)) throw DomainError("sets must be pairwise disjoint");
  for (const auto& s : sets) {
    const double m = lebesgue(s);
    if (m == kInf) throw DomainError("sets must have finite Lebesgue measure");
    if (!allow_null && m == 0.0) throw DomainError("sets must have positive Lebesgue measure");
  }
}

std::vector<std::size_t> random_permutation(std::size_t k, Stream& rng) {
  std::vector<std::size_t> p(k);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = k; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

// Index of cut-off r = floor(alpha (B + 1)) largest resampled statistic.
double resample_threshold(std::vector<double> stats, double alpha) {
  const auto r = static_cast<std::size_t>(std::floor(alpha * double(stats.size() + 1)));
  if (r == 0 || stats.empty()) return kInf;
  std::sort(stats.begin(), stats.end(), std::greater<>());
  return stats[std::min(r, stats.size()) - 1];
}

double p_value(std::span<const double> stats, double observed) {
  const auto ge = std::count_if(stats.begin(), stats.end(), [&](double t) { return t >= observed; });
  return double(1 + ge) / double(stats.size() + 1);
}

// --- categorical exchangeability ------------------------------------------

struct CategoricalData {
  std::size_t k = 0;
  std::size_t levels = 0;
  std::vector<double> values;  // sorted distinct values
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> compose;  // compose[s * P + p] = index of s o p
  std::vector<std::uint32_t> codes;  // codes[i * P + p] = code of x_i o perm_p
};

std::size_t perm_index(const std::vector<std::vector<std::size_t>>& perms,
                       const std::vector<std::size_t>& p) {
  return static_cast<std::size_t>(std::lower_bound(perms.begin(), perms.end(), p) - perms.begin());
}

CategoricalData categorize(const WeightedData& data, std::size_t k,
                           const std::vector<double>& levels) {
  CategoricalData c;
  c.k = k;
  c.levels = levels.size();
  c.values = levels;
  c.perms = all_permutations(k);
  const std::size_t P = c.perms.size();
  c.compose.resize(P * P);
  for (std::size_t s = 0; s < P; ++s) {
    for (std::size_t p = 0; p < P; ++p) {
      // (x o s) o p has entries x[s[p[j]]]
      std::vector<std::size_t> sp(k);
      for (std::size_t j = 0; j < k; ++j) sp[j] = c.perms[s][c.perms[p][j]];
      c.compose[s * P + p] = perm_index(c.perms, sp);
    }
  }
  const std::size_t N = data.rows();
  c.codes.resize(N * P);
  std::vector<std::uint32_t> level(k);
  for (std::size_t i = 0; i < N; ++i) {
    auto row = data.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      level[j] = static_cast<std::uint32_t>(
          std::lower_bound(levels.begin(), levels.end(), row[j]) - levels.begin());
    }
    for (std::size_t p = 0; p < P; ++p) {
      std::uint32_t code = 0;
      for (std::size_t j = 0; j < k; ++j) {
        code = code * static_cast<std::uint32_t>(c.levels) + level[c.perms[p][j]];
      }
      c.codes[i * P + p] = code;
    }
  }
  return c;
}

struct CellTable {
  std::vector<double> sum;
  std::vector<double> sumsq;
  std::vector<double> lhs;  // weighted frequency of the pattern
  std::vector<double> rhs;  // weighted frequency of the permuted pattern
};

// Statistic for one dataset: draw i is read through permutation sigma[i].
// Returns max over non-identity pi of the mean over active cells of z^2.
double categorical_statistic(const CategoricalData& c, std::span<const double> weights,
                             std::span<const std::size_t> sigma, CellTable* worst_table,
                             std::size_t* worst_perm) {
  const std::size_t P = c.perms.size();
  const std::size_t N = weights.size();
  std::size_t cells = 1;
  for (std::size_t j = 0; j < c.k; ++j) cells *= c.levels;
  const auto n = static_cast<double>(N);
  double best = 0.0;
  CellTable t;
  for (std::size_t pi = 1; pi < P; ++pi) {
    t.sum.assign(cells, 0.0);
    t.sumsq.assign(cells, 0.0);
    t.lhs.assign(cells, 0.0);
    t.rhs.assign(cells, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t s = sigma.empty() ? 0 : sigma[i];
      const std::uint32_t a = c.codes[i * P + s];
      const std::uint32_t b = c.codes[i * P + c.compose[s * P + pi]];
      const double w = weights[i];
      t.lhs[a] += w;
      t.rhs[b] += w;
      if (a == b) continue;
      t.sum[a] += w;
      t.sum[b] -= w;
      t.sumsq[a] += w * w;
      t.sumsq[b] += w * w;
    }
    double total = 0.0;
    std::size_t active = 0;
    for (std::size_t m = 0; m < cells; ++m) {
      if (t.sumsq[m] == 0.0) continue;
      const double mean = t.sum[m] / n;
      const double var = std::max(0.0, (t.sumsq[m] / n - mean * mean) * n / (n - 1.0));
      const double z = z_score(mean, std::sqrt(var / n));
      total += z * z;
      ++active;
    }
    const double stat = active ? total / double(active) : 0.0;
    if (stat > best || (worst_perm && *worst_perm == 0)) {
      best = std::max(best, stat);
      if (worst_perm) *worst_perm = pi;
      if (worst_table) *worst_table = t;
    }
  }
  return best;
}

TestReport categorical_test(const WeightedData& data, std::size_t k,
                            const std::vector<double>& levels,
                            const ExchangeabilityOptions& options, const SimContext& ctx) {
  const CategoricalData c = categorize(data, k, levels);
  const std::size_t N = data.rows();
  const std::size_t P = c.perms.size();

  CellTable table;
  std::size_t worst = 0;
  const double observed = categorical_statistic(c, data.weights, {}, &table, &worst);

  const SimContext rctx = ctx.derive(lane_tag::kResample);
  const auto resampled = simulate(options.resamples, rctx, [&](std::size_t, Stream& rng) {
    std::vector<std::size_t> sigma(N);
    for (auto& s : sigma) s = rng.below(P);
    return categorical_statistic(c, data.weights, sigma, nullptr, nullptr);
  });

  TestReport r = make_report("exchangeability", observed,
                             resample_threshold(resampled, options.alpha));
  r.n_samples = N;
  r.ess = effective_sample_size(data.weights);
  r.extra["mode"] = "categorical";
  r.extra["p_value"] = p_value(resampled, observed);
  r.extra["alpha"] = options.alpha;
  r.extra["resamples"] = options.resamples;
  r.extra["levels"] = levels;
  if (worst == 0) return r;
  r.extra["worst_permutation"] = perm_label(c.perms[worst]);

  // Per-cell table for the worst permutation, largest |z| first.
  const auto n = static_cast<double>(N);
  struct Cell {
    std::size_t code;
    double z;
    ComparisonRow row;
  };
  std::vector<Cell> rows;
  std::vector<double> pattern(k);
  for (std::size_t m = 0; m < table.sum.size(); ++m) {
    if (table.lhs[m] == 0.0 && table.rhs[m] == 0.0) continue;
    std::size_t code = m;
    for (std::size_t j = k; j-- > 0;) {
      pattern[j] = c.values[code % c.levels];
      code /= c.levels;
    }
    const double mean = table.sum[m] / n;
    const double var =
        N > 1 ? std::max(0.0, (table.sumsq[m] / n - mean * mean) * n / (n - 1.0)) : 0.0;
    const double se = std::sqrt(var / n);
    const double z = z_score(mean, se);
    ComparisonRow row{"cell" + pattern_label(pattern) + " vs " + perm_label(c.perms[worst]),
                      table.lhs[m] / n, table.rhs[m] / n, se, z, z <= 4.0};
    rows.push_back({m, z, row});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Cell& x, const Cell& y) { return x.z > y.z; });
  if (rows.size() > 64) rows.resize(64);
  for (auto& cell : rows) r.details.push_back(std::move(cell.row));
  return r;
}

// --- energy-distance exchangeability --------------------------------------

double quadratic_form(const std::vector<double>& W, std::size_t M, std::span<const double> eps) {
  double total = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    double row = 0.0;
    const double* w = W.data() + i * M;
    for (std::size_t j = 0; j < M; ++j) row += w[j] * eps[j];
    total += eps[i] * row;
  }
  return total;
}

// Unequal weights break the paired-swap null, so draw an equally weighted
// subsample with probability proportional to weight first.
WeightedData importance_resample(const WeightedData& data, std::size_t m, Stream& rng) {
  std::vector<double> cumulative(data.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (data.weights[i] < 0.0) throw DomainError("weights must be nonnegative");
    total += data.weights[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw DomainError("weights must have positive sum");
  WeightedData out;
  out.dim = data.dim;
  for (std::size_t r = 0; r < m; ++r) {
    const double u = rng.uniform() * total;
    auto idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                        cumulative.begin());
    idx = std::min(idx, data.rows() - 1);
    auto row = data.row(idx);
    out.values.insert(out.values.end(), row.begin(), row.end());
    out.weights.push_back(1.0);
    out.aux.push_back(data.aux[idx]);
  }
  return out;
}

TestReport energy_test(const WeightedData& input, std::size_t k,
                       const ExchangeabilityOptions& options, const SimContext& ctx) {
  const bool equal_weights =
      std::all_of(input.weights.begin(), input.weights.end(),
                  [&](double w) { return w == input.weights.front(); });
  WeightedData resampled_input;
  if (!equal_weights) {
    Stream rng = ctx.derive(lane_tag::kResample).derive(lane_tag::kDraws).stream(0);
    resampled_input = importance_resample(
        input, std::min(input.rows(), std::max<std::size_t>(2, options.energy_subsample)), rng);
  }
  const WeightedData& data = equal_weights ? input : resampled_input;
  const std::size_t M = std::min(data.rows(), std::max<std::size_t>(2, options.energy_subsample));
  double wsum = 0.0;
  for (std::size_t i = 0; i < M; ++i) wsum += data.weights[i];
  if (!(wsum > 0.0)) throw DomainError("weights must have positive sum");
  const double scale = 2.0 / (wsum * wsum);

  auto distance = [&](std::span<const double> x, std::span<const double> y,
                      std::size_t t1, std::size_t t2) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t jj = j == t1 ? t2 : (j == t2 ? t1 : j);
      const double d = x[j] - y[jj];
      s += d * d;
    }
    return std::sqrt(s);
  };

  struct Transposition {
    std::size_t a, b;
    std::vector<double> W;
  };
  std::vector<Transposition> taus;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      Transposition t{a, b, std::vector<double>(M * M)};
      parallel_for(M, ctx.threads, [&](std::size_t i) {
        auto xi = data.row(i);
        for (std::size_t j = 0; j < M; ++j) {
          auto xj = data.row(j);
          const double swapped = distance(xi, xj, a, b);
          const double plain = distance(xi, xj, k, k);
          t.W[i * M + j] = data.weights[i] * data.weights[j] * (swapped - plain);
        }
      });
      taus.push_back(std::move(t));
    }
  }

  const std::vector<double> ones(M, 1.0);
  double observed = 0.0;
  std::size_t worst = 0;
  std::vector<double> per_tau;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    per_tau.push_back(scale * quadratic_form(taus[t].W, M, ones));
    if (per_tau.back() > observed || t == 0) {
      observed = std::max(observed, per_tau.back());
      worst = t;
    }
  }

  const SimContext rctx = ctx.derive(lane_tag::kResample);
  const auto resampled = simulate(options.resamples, rctx, [&](std::size_t, Stream& rng) {
    std::vector<double> eps(M);
    for (auto& e : eps) e = (rng.next_u32() & 1u) ? 1.0 : -1.0;
    double best = -kInf;
    for (const auto& t : taus) best = std::max(best, scale * quadratic_form(t.W, M, eps));
    return taus.empty() ? 0.0 : best;
  });

  TestReport r = make_report("exchangeability", observed,
                             resample_threshold(resampled, options.alpha));
  r.n_samples = input.rows();
  r.ess = effective_sample_size(input.weights);
  r.extra["mode"] = "energy";
  r.extra["importance_resampled"] = !equal_weights;
  r.extra["p_value"] = p_value(resampled, observed);
  r.extra["alpha"] = options.alpha;
  r.extra["resamples"] = options.resamples;
  r.extra["energy_subsample"] = M;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[taus[t].a], perm[taus[t].b]);
    r.details.push_back({"energy " + perm_label(perm), per_tau[t], 0.0, 0.0, per_tau[t],
                         per_tau[t] <= r.threshold});
  }
  if (!taus.empty()) r.extra["worst_permutation"] = r.details[worst].id.substr(7);
  return r;
}

}  // namespace

std::vector<std::vector<std::size_t>> all_permutations(std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> p(k);
  std::iota(p.begin(), p.end(), 0);
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

WeightedData draw_sequences(const SequenceModel& model, std::size_t n, std::size_t draws,
                            const SimContext& ctx) {
  if (n == 0) throw DomainError("prefix length must be positive");
  const auto samples = simulate(draws, ctx.derive(lane_tag::kDraws),
                                [&](std::size_t, Stream& rng) { return model.sample(n, rng); });
  WeightedData d;
  d.dim = n;
  d.values.reserve(n * draws);
  for (const auto& s : samples) {
    d.values.insert(d.values.end(), s.values.begin(), s.values.end());
    d.weights.push_back(s.weight);
    d.aux.push_back(s.aux_x);
  }
  return d;
}

WeightedData draw_set_values(const MeasureModel& model, std::span<const IntervalSet> sets,
                             std::size_t draws, const SimContext& ctx) {
  check_sets(sets, true);
  IntervalSet window;
  for (const auto& s : sets) window = set_union(window, s);
  struct Row {
    std::vector<double> values;
    double weight = 1.0;
    double aux = 1.0;
  };
  const auto rows = simulate(draws, ctx.derive(lane_tag::kDraws), [&](std::size_t, Stream& rng) {
    const MeasureSample s = model.sample(window, rng);
    Row row;
    row.weight = s.weight;
    row.aux = s.aux_x;
    for (const auto& set : sets) row.values.push_back(evaluate(s, set));
    return row;
  });
  WeightedData d;
  d.dim = sets.size();
  for (const auto& row : rows) {
    d.values.insert(d.values.end(), row.values.begin(), row.values.end());
    d.weights.push_back(row.weight);
    d.aux.push_back(row.aux);
  }
  return d;
}

Estimate zonoid_functional(const WeightedData& data, std::span<const double> u) {
  if (u.size() != data.dim) throw DomainError("direction length must match the data dimension");
  if (data.rows() < 2) throw DomainError("at least two draws are required");
  std::vector<double> terms(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    terms[i] = data.weights[i] * std::fabs(dot(u, data.row(i)));
  }
  return mean_estimate(terms, data.weights);
}

Estimate zonoid_functional(const SequenceModel& model, std::span<const double> u,
                           std::size_t draws, const SimContext& ctx) {
  return zonoid_functional(draw_sequences(model, u.size(), draws, ctx), u);
}

Estimate zonoid_functional_sets(const MeasureModel& model, std::span<const IntervalSet> sets,
                                std::span<const double> u, std::size_t draws,
                                const SimContext& ctx) {
  if (u.size() != sets.size()) throw DomainError("direction length must match the number of sets");
  return zonoid_functional(draw_set_values(model, sets, draws, ctx), u);
}

std::vector<std::vector<double>> default_u_grid(std::size_t n, std::size_t random_directions,
                                                const SimContext& ctx) {
  std::vector<std::vector<double>> grid;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    grid.push_back(std::move(e));
  }
  if (n >= 2 && n <= 4) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
      std::vector<double> s(n, 1.0);
      for (std::size_t j = 1; j < n; ++j) {
        if (mask & (std::size_t{1} << (j - 1))) s[j] = -1.0;
      }
      grid.push_back(std::move(s));
    }
  }
  Stream rng = ctx.derive(lane_tag::kDirections).stream(0);
  for (std::size_t r = 0; r < random_directions; ++r) {
    std::vector<double> g(n);
    double norm = 0.0;
    for (auto& v : g) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : g) v /= norm;
    grid.push_back(std::move(g));
  }
  return grid;
}

TestReport swap_invariance_test(const WeightedData& data,
                                std::span<const std::vector<double>> u_grid,
                                const SwapTestOptions& options, const SimContext& ctx) {
  if (u_grid.empty()) throw DomainError("u_grid must be nonempty");
  const std::size_t n = data.dim;
  const std::size_t N = data.rows();
  if (N < 2) throw DomainError("at least two draws are required");

  std::vector<std::vector<std::size_t>> perms;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::vector<std::size_t> p(n);
      std::iota(p.begin(), p.end(), 0);
      std::swap(p[a], p[b]);
      perms.push_back(std::move(p));
    }
  }
  if (n > 2) {
    Stream rng = ctx.derive(lane_tag::kPermutations).stream(0);
    for (std::size_t r = 0; r < options.random_permutations; ++r) {
      perms.push_back(random_permutation(n, rng));
    }
  }

  TestReport report = make_report("swap-invariance", 0.0, options.threshold);
  double worst = 0.0;
  std::vector<double> d(N);
  for (std::size_t g = 0; g < u_grid.size(); ++g) {
    const auto& u = u_grid[g];
    if (u.size() != n) throw DomainError("direction length must match the prefix length");
    for (const auto& p : perms) {
      const std::vector<double> up = permuted(u, p);
      if (up == u) continue;
      double lhs = 0.0;
      double rhs = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const auto x = data.row(i);
        const double a = data.weights[i] * std::fabs(dot(u, x));
        const double b = data.weights[i] * std::fabs(dot(up, x));
        lhs += a;
        rhs += b;
        d[i] = a - b;
      }
      const Moments m = moments(d);
      const double z = z_score(m.mean, m.se);
      worst = std::max(worst, z);
      report.details.push_back({"u" + std::to_string(g) + " " + perm_label(p), lhs / double(N),
                                rhs / double(N), m.se, z, z <= options.threshold});
    }
  }
  report.statistic = worst;
  report.verdict = worst <= options.threshold ? Verdict::Pass : Verdict::Reject;
  report.n_samples = N;
  report.ess = effective_sample_size(data.weights);
  report.extra["directions"] = u_grid.size();
  report.extra["permutations"] = perms.size();
  return report;
}

TestReport test_swap_invariance(const SequenceModel& model, std::size_t n,
                                std::vector<std::vector<double>> u_grid, std::size_t draws,
                                const SimContext& ctx, const SwapTestOptions& options) {
  if (u_grid.empty()) u_grid = default_u_grid(n, options.random_directions, ctx);
  return swap_invariance_test(draw_sequences(model, n, draws, ctx), u_grid, options, ctx);
}

TestReport test_swap_invariance_sets(const MeasureModel& model, std::span<const IntervalSet> sets,
                                     std::vector<std::vector<double>> u_grid, std::size_t draws,
                                     const SimContext& ctx, const SwapTestOptions& options) {
  const double m0 = lebesgue(sets.empty() ? IntervalSet{} : sets.front());
  for (const auto& s : sets) {
    if (lebesgue(s) != m0) throw DomainError("swap test sets must have equal Lebesgue measure");
  }
  if (u_grid.empty()) u_grid = default_u_grid(sets.size(), options.random_directions, ctx);
  return swap_invariance_test(draw_set_values(model, sets, draws, ctx), u_grid, options, ctx);
}

TestReport exchangeability_test(const WeightedData& data, std::size_t k,
                                const ExchangeabilityOptions& options, const SimContext& ctx) {
  if (k == 0 || k > data.dim) throw DomainError("k must be in [1, dimension]");
  if (data.rows() < 2) throw DomainError("at least two draws are required");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw DomainError("alpha must be in (0, 1)");

  WeightedData head;
  if (k == data.dim) {
    head = data;
  } else {
    head.dim = k;
    head.weights = data.weights;
    head.aux = data.aux;
    head.values.reserve(k * data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
      auto row = data.row(i);
      head.values.insert(head.values.end(), row.begin(), row.begin() + long(k));
    }
  }

  std::vector<double> levels;
  bool categorical = k <= 4;
  if (categorical) {
    levels = head.values;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    double cells = std::pow(double(levels.size()), double(k));
    categorical = levels.size() <= options.categorical_cap && cells <= double(1 << 16);
  }
  if (categorical) return categorical_test(head, k, levels, options, ctx);
  return energy_test(head, k, options, ctx);
}

TestReport test_exchangeability(const SequenceModel& model, std::size_t k, std::size_t draws,
                                const SimContext& ctx, const ExchangeabilityOptions& options) {
  return exchangeability_test(draw_sequences(model, k, draws, ctx), k, options, ctx);
}

TestReport test_exchangeability_sets(const MeasureModel& model, std::span<const IntervalSet> sets,
                                     std::size_t draws, const SimContext& ctx,
                                     const ExchangeabilityOptions& options) {
  const WeightedData d = draw_set_values(model, sets, draws, ctx);
  return exchangeability_test(d, d.dim, options, ctx);
}

Estimate max_functional(const SequenceModel& model, std::span<const std::size_t> indices,
                        double a, double b, std::size_t draws, const SimContext& ctx) {
  if (indices.empty()) throw DomainError("at least one index is required");
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] <= indices[i - 1]) throw DomainError("indices must be strictly increasing");
  }
  const WeightedData data = draw_sequences(model, indices.back() + 1, draws, ctx);
  std::vector<double> terms(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto row = data.row(i);
    double mx = -kInf;
    for (std::size_t k : indices) {
      if (row[k] != a && row[k] != b) {
        throw DomainError("value " + format_double(row[k]) + " outside the two-point set");
      }
      mx = std::max(mx, row[k]);
    }
    terms[i] = data.weights[i] * mx;
  }
  return mean_estimate(terms, data.weights);
}

ZTable make_z_table(std::size_t n, double a, double b,
                    const std::map<std::vector<std::size_t>, double>& z) {
  if (n == 0 || n > 12) throw DomainError("z table size must be in [1, 12]");
  ZTable t{n, a, b, std::vector<double>(std::size_t{1} << n, kInf), {}};
  for (const auto& [tuple, value] : z) {
    std::size_t mask = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (tuple[i] >= n || (i && tuple[i] <= tuple[i - 1])) {
        throw DomainError("z table keys must be sorted tuples of indices below n");
      }
      mask |= std::size_t{1} << tuple[i];
    }
    if (mask == 0) throw DomainError("z table keys must be nonempty");
    t.z[mask] = value;
  }
  for (std::size_t mask = 1; mask < t.z.size(); ++mask) {
    if (t.z[mask] == kInf) throw DomainError("z table must cover every nonempty subset");
  }
  t.z[0] = 0.0;
  return t;
}

ZTable estimate_z_table(const SequenceModel& model, std::size_t n, double a, double b,
                        std::size_t draws, const SimContext& ctx) {
  if (n == 0 || n > 8) throw DomainError("estimated z tables support n in [1, 8]");
  const WeightedData data = draw_sequences(model, n, draws, ctx);
  const std::size_t S = std::size_t{1} << n;
  const std::size_t N = data.rows();
  if (N < 2) throw DomainError("at least two draws are required");
  std::vector<double> terms(N * S, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    auto row = data.row(i);
    for (double v : row) {
      if (v != a && v != b) throw DomainError("value " + format_double(v) + " outside the two-point set");
    }
    for (std::size_t mask = 1; mask < S; ++mask) {
      double mx = -kInf;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask & (std::size_t{1} << j)) mx = std::max(mx, row[j]);
      }
      terms[i * S + mask] = data.weights[i] * mx;
    }
  }
  ZTable t{n, a, b, std::vector<double>(S, 0.0), std::vector<double>(S * S, 0.0)};
  const auto dn = static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t m = 1; m < S; ++m) t.z[m] += terms[i * S + m];
  }
  for (auto& v : t.z) v /= dn;
  for (std::size_t i = 0; i < N; ++i) {
    const double* row = terms.data() + i * S;
    for (std::size_t m = 1; m < S; ++m) {
      const double dm = row[m] - t.z[m];
      for (std::size_t l = m; l < S; ++l) t.covariance[m * S + l] += dm * (row[l] - t.z[l]);
    }
  }
  for (std::size_t m = 1; m < S; ++m) {
    for (std::size_t l = m; l < S; ++l) {
      const double c = t.covariance[m * S + l] / (dn - 1.0) / dn;
      t.covariance[m * S + l] = c;
      t.covariance[l * S + m] = c;
    }
  }
  return t;
}

ZTable z_table_from_pmf(const ExactPmf& pmf, std::size_t n, double a, double b) {
  if (n == 0 || n > 12) throw DomainError("z table size must be in [1, 12]");
  const std::size_t S = std::size_t{1} << n;
  ZTable t{n, a, b, std::vector<double>(S, 0.0), {}};
  for (std::size_t s = 0; s < pmf.support.size(); ++s) {
    const auto& x = pmf.support[s];
    if (x.size() != n) throw DomainError("pmf support points must have length n");
    for (double v : x) {
      if (v != a && v != b) throw DomainError("pmf support outside the two-point set");
    }
    for (std::size_t mask = 1; mask < S; ++mask) {
      double mx = -kInf;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask & (std::size_t{1} << j)) mx = std::max(mx, x[j]);
      }
      t.z[mask] += pmf.probs[s] * mx;
    }
  }
  return t;
}

double JointPmf::prob(std::span<const double> pattern) const {
  if (pattern.size() != n) throw DomainError("pattern length must equal n");
  std::size_t mask = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (pattern[j] == b) {
      mask |= std::size_t{1} << j;
    } else if (pattern[j] != a) {
      throw DomainError("pattern value outside the two-point set");
    }
  }
  return probs[mask];
}

JointPmf reconstruct_binary(const ZTable& z, ReconstructMode mode) {
  const std::size_t n = z.n;
  if (n == 0 || n > 12) throw DomainError("reconstruction supports n in [1, 12]");
  if (std::fabs(z.a) == std::fabs(z.b)) throw DomainError("two-point set requires |a| != |b|");
  const std::size_t S = std::size_t{1} << n;
  if (z.z.size() != S) throw DomainError("z table has the wrong size");
  const double lo = std::min(z.a, z.b);
  const double hi = std::max(z.a, z.b);
  const std::size_t full = S - 1;

  // q[K] = P(all coordinates in K take the lower value).
  std::vector<double> q(S);
  q[0] = 1.0;
  for (std::size_t m = 1; m < S; ++m) q[m] = (hi - z.z[m]) / (hi - lo);

  // p_hi[H] = P(exactly the coordinates in H take the upper value).
  std::vector<double> p_hi(S, 0.0);
  const bool with_cov = !z.covariance.empty() && n <= 8;
  std::vector<double> jac;  // d p_hi[H] / d z[K]
  if (with_cov) jac.assign(S * S, 0.0);
  for (std::size_t H = 0; H < S; ++H) {
    const std::size_t Hc = full & ~H;
    double sum = 0.0;
    // enumerate T subset of H
    for (std::size_t T = H;; T = (T - 1) & H) {
      const double sign = (std::popcount(T) & 1) ? -1.0 : 1.0;
      const std::size_t K = Hc | T;
      sum += sign * q[K];
      if (with_cov && K != 0) jac[H * S + K] += -sign / (hi - lo);
      if (T == 0) break;
    }
    p_hi[H] = sum;
  }

  JointPmf out{n, z.a, z.b, std::vector<double>(S, 0.0), 0.0, {}};
  // Bit j of the output mask marks coordinate j == b.
  auto out_mask = [&](std::size_t H) { return z.b == hi ? H : (full & ~H); };
  for (std::size_t H = 0; H < S; ++H) out.probs[out_mask(H)] = p_hi[H];

  if (with_cov) {
    std::vector<double> tmp(S * S, 0.0);  // J Cov
    for (std::size_t H = 0; H < S; ++H) {
      for (std::size_t K = 1; K < S; ++K) {
        const double j = jac[H * S + K];
        if (j == 0.0) continue;
        for (std::size_t L = 0; L < S; ++L) tmp[H * S + L] += j * z.covariance[K * S + L];
      }
    }
    out.covariance.assign(S * S, 0.0);
    for (std::size_t H = 0; H < S; ++H) {
      for (std::size_t G = 0; G < S; ++G) {
        double c = 0.0;
        for (std::size_t L = 1; L < S; ++L) c += tmp[H * S + L] * jac[G * S + L];
        out.covariance[out_mask(H) * S + out_mask(G)] = c;
      }
    }
  }

  double total = 0.0;
  for (double p : out.probs) {
    if (p < 0.0) out.clip_mass += -p;
    total += p;
  }
  if (mode == ReconstructMode::Exact) {
    for (double p : out.probs) {
      if (p < -1e-9) throw DomainError("inconsistent z table: negative probability " + format_double(p));
    }
    if (std::fabs(total - 1.0) > 1e-6) throw DomainError("inconsistent z table: mass " + format_double(total));
    return out;
  }
  total = 0.0;
  for (auto& p : out.probs) {
    p = std::max(0.0, p);
    total += p;
  }
  if (!(total > 0.0)) throw DomainError("reconstruction has no positive mass");
  for (auto& p : out.probs) p /= total;
  return out;
}

TestReport check_exchangeable_pmf(const JointPmf& pmf, const PmfCheckOptions& options) {
  const std::size_t S = pmf.probs.size();
  if (S != (std::size_t{1} << pmf.n)) throw DomainError("pmf has the wrong size");
  const bool studentized = !pmf.covariance.empty();
  TestReport r = make_report("exchangeable-pmf", 0.0,
                             studentized ? options.se_multiplier : options.exact_tolerance);
  std::vector<double> pattern(pmf.n);
  auto label = [&](std::size_t m) {
    for (std::size_t j = 0; j < pmf.n; ++j) pattern[j] = (m >> j) & 1 ? pmf.b : pmf.a;
    return pattern_label(pattern);
  };
  struct Row {
    double stat;
    ComparisonRow row;
  };
  std::vector<Row> rows;
  double worst = 0.0;
  for (std::size_t m = 0; m < S; ++m) {
    for (std::size_t l = m + 1; l < S; ++l) {
      if (std::popcount(m) != std::popcount(l)) continue;
      const double diff = pmf.probs[m] - pmf.probs[l];
      double se = 0.0;
      double stat = std::fabs(diff);
      if (studentized) {
        const double v = pmf.covariance[m * S + m] + pmf.covariance[l * S + l] -
                         2.0 * pmf.covariance[m * S + l];
        se = std::sqrt(std::max(0.0, v));
        stat = z_score(diff, se);
      }
      worst = std::max(worst, stat);
      rows.push_back({stat, {label(m) + " vs " + label(l), pmf.probs[m], pmf.probs[l], se,
                             studentized ? stat : z_score(diff, se), stat <= r.threshold}});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.stat > y.stat; });
  if (rows.size() > 64) rows.resize(64);
  for (auto& row : rows) r.details.push_back(std::move(row.row));
  r.statistic = worst;
  r.verdict = worst <= r.threshold ? Verdict::Pass : Verdict::Reject;
  r.extra["mode"] = studentized ? "estimated" : "exact";
  r.extra["clip_mass"] = pmf.clip_mass;
  return r;
}

SequenceModel abs_model(const SequenceModel& model) {
  ModelSpec spec{"abs", nlohmann::json{{"base", model.spec()}}};
  SequenceModel base = model;
  auto out = SequenceModel(
      spec,
      [base](std::size_t n, Stream& rng) {
        SequenceSample s = base.sample(n, rng);
        for (auto& v : s.values) v = std::fabs(v);
        return s;
      },
      true);
  return out;
}

IntensityResult intensity_ratio(const MeasureModel& model, std::span<const IntervalSet> sets,
                                std::size_t draws, const SimContext& ctx, double threshold) {
  check_sets(sets, false);
  const WeightedData data = draw_set_values(model, sets, draws, ctx);
  const std::size_t N = data.rows();
  const std::size_t k = sets.size();
  std::vector<std::vector<double>> terms(k, std::vector<double>(N));
  for (std::size_t j = 0; j < k; ++j) {
    const double m = lebesgue(sets[j]);
    for (std::size_t i = 0; i < N; ++i) terms[j][i] = data.weights[i] * data.row(i)[j] / m;
  }
  IntensityResult out;
  for (std::size_t j = 0; j < k; ++j) out.ratios.push_back(mean_estimate(terms[j], data.weights));

  out.equality = make_report("intensity-equality", 0.0, threshold);
  double worst = 0.0;
  std::vector<double> d(N);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t l = j + 1; l < k; ++l) {
      for (std::size_t i = 0; i < N; ++i) d[i] = terms[j][i] - terms[l][i];
      const Moments m = moments(d);
      const double z = z_score(m.mean, m.se);
      worst = std::max(worst, z);
      out.equality.details.push_back({"set" + std::to_string(j + 1) + " vs set" + std::to_string(l + 1),
                                      out.ratios[j].value, out.ratios[l].value, m.se, z,
                                      z <= threshold});
    }
  }
  out.equality.statistic = worst;
  out.equality.verdict = worst <= threshold ? Verdict::Pass : Verdict::Reject;
  out.equality.n_samples = N;
  out.equality.ess = effective_sample_size(data.weights);
  return out;
}

TestReport finite_rep_check(const MeasureModel& model, const IntervalSet& space,
                            std::span<const IntervalSet> cells, std::size_t draws,
                            const SimContext& ctx, const ExchangeabilityOptions& options) {
  check_sets(cells, false);
  IntervalSet cover;
  for (const auto& c : cells) cover = set_union(cover, c);
  if (!(cover == space)) throw DomainError("cells must partition the space");
  const double m0 = lebesgue(cells.front());
  for (const auto& c : cells) {
    if (std::fabs(lebesgue(c) - m0) > 1e-12 * m0) throw DomainError("cells must have equal Lebesgue measure");
  }
  WeightedData data = draw_set_values(model, cells, draws, ctx);
  const std::size_t N = data.rows();
  const std::size_t k = data.dim;
  double mean = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += data.values[i * k + j];
    for (std::size_t j = 0; j < k; ++j) {
      data.values[i * k + j] = total > 0.0 ? data.values[i * k + j] / total : 0.0;
    }
    data.weights[i] *= total;
    mean += data.weights[i];
  }
  mean /= double(N);
  if (!(mean > 0.0)) throw DomainError("estimated E xi(S) must be positive");
  for (auto& w : data.weights) w /= mean;
  TestReport r = exchangeability_test(data, k, options, ctx);
  r.name = "finite-representation";
  r.extra["mean_total_mass"] = mean;
  return r;
}

}  // namespace swapzon
