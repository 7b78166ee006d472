#include "ergodic.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "format.hpp"

namespace swapzon {
namespace {

double signed_z(double diff, double se) {
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? kInf : -kInf;
}

TestReport trend_report(const std::vector<std::vector<double>>& terms,
                        std::span<const std::size_t> n, const std::vector<Estimate>& errors) {
  TestReport r = make_report("l1-trend", 0.0, 0.0);
  double worst = -kInf;
  const std::size_t N = terms.empty() ? 0 : terms.front().size();
  for (std::size_t c = 1; c < terms.size(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < N; ++i) mean += terms[c][i] - terms[c - 1][i];
    mean /= double(N);
    double ss = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double d = terms[c][i] - terms[c - 1][i] - mean;
      ss += d * d;
    }
    const double se = N > 1 ? std::sqrt(ss / double(N - 1) / double(N)) : 0.0;
    const double z = signed_z(mean, se);
    worst = std::max(worst, z);
    r.details.push_back({"n=" + std::to_string(n[c - 1]) + " -> n=" + std::to_string(n[c]),
                         errors[c - 1].value, errors[c].value, se, z, z <= 0.0});
  }
  r.statistic = terms.size() < 2 ? 0.0 : worst;
  r.verdict = r.statistic <= r.threshold ? Verdict::Pass : Verdict::Reject;
  r.n_samples = N;
  r.ess = errors.empty() ? 0.0 : errors.front().ess;
  return r;
}

void check_equal_measure(std::span<const IntervalSet> sets) {
  if (sets.empty()) throw DomainError("at least one set is required");
  if (!pairwise_disjoint(sets)) throw DomainError("sets must be pairwise disjoint");
  const double m0 = lebesgue(sets.front());
  if (!(m0 > 0.0) || m0 == kInf) throw DomainError("sets must have finite positive measure");
  for (const auto& s : sets) {
    if (std::fabs(lebesgue(s) - m0) > 1e-12 * m0) {
      throw DomainError("sets must have equal Lebesgue measure");
    }
  }
}

TestReport q_vs_base_report(std::span<const double> q) {
  double ss = 0.0;
  for (double v : q) ss += (v - 1.0) * (v - 1.0);
  const double n = double(q.size());
  TestReport r = make_report("q-vs-base", std::sqrt(ss / n), 4.0 / std::sqrt(n));
  r.n_samples = q.size();
  r.ess = effective_sample_size(q);
  return r;
}

RepresentationResult finish(std::vector<RepresentationCheck>& checks, std::size_t k,
                            const SimContext& ctx, const RepresentationOptions& options) {
  RepresentationResult out;
  out.q_mean_raw = normalize_q_weights(checks);
  WeightedData d;
  d.dim = k;
  for (const auto& c : checks) {
    d.values.insert(d.values.end(), c.eta_values.begin(), c.eta_values.end());
    d.weights.push_back(c.q_weight);
    d.aux.push_back(1.0);
  }
  out.exchangeability = exchangeability_test(d, k, options.exchangeability, ctx);
  out.exchangeability.name = "representation";
  out.q_vs_base = q_vs_base_report(d.weights);
  return out;
}

}  // namespace

ErgodicPath ergodic_path(const MeasureSample& sample, const MuSequence& ms) {
  if (sample.atomic && !is_subset(ms.last(), sample.window)) {
    throw DomainError("sample window does not cover the mu-sequence");
  }
  ErgodicPath path;
  path.aux_x = sample.aux_x;
  path.mu_values = ms.measures();
  path.ratios.reserve(ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) {
    path.ratios.push_back(evaluate(sample.realization, ms.sets()[i]) / ms.measures()[i]);
  }
  return path;
}

ErgodicPath ergodic_path(const MeasureModel& model, const MuSequence& ms, Stream& stream) {
  return ergodic_path(model.sample(ms.last(), stream), ms);
}

std::vector<double> sequence_ergodic_path(const SequenceSample& s) {
  std::vector<double> out(s.values.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < s.values.size(); ++j) {
    sum += s.values[j];
    out[j] = sum / double(j + 1);
  }
  return out;
}

std::vector<double> p_norm_path(const SequenceSample& s, double p) {
  if (!(p >= 1.0)) throw DomainError("p must be at least 1");
  std::vector<double> out(s.values.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < s.values.size(); ++j) {
    const double a = std::fabs(s.values[j]);
    if (std::isinf(p)) {
      acc = std::max(acc, a);
      out[j] = acc;
    } else {
      acc += p == 1.0 ? a : std::pow(a, p);
      const double mean = acc / double(j + 1);
      out[j] = p == 1.0 ? mean : std::pow(mean, 1.0 / p);
    }
  }
  return out;
}

std::vector<double> tail_oscillation(std::span<const double> path, std::span<const std::size_t> n0) {
  if (path.empty()) throw DomainError("path must be nonempty");
  const double last = path.back();
  // suffix[i] = max_{m >= i} |r_m - r_last|
  std::vector<double> suffix(path.size() + 1, 0.0);
  for (std::size_t i = path.size(); i-- > 0;) {
    suffix[i] = std::max(suffix[i + 1], std::fabs(path[i] - last));
  }
  std::vector<double> out;
  for (std::size_t n : n0) {
    if (n == 0 || n > path.size()) throw DomainError("n0 outside the path");
    out.push_back(suffix[n - 1]);
  }
  return out;
}

namespace {

void check_checkpoints(std::span<const std::size_t> n, std::size_t limit) {
  if (n.empty()) throw DomainError("at least one checkpoint is required");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == 0 || n[i] > limit || (i && n[i] <= n[i - 1])) {
      throw DomainError("checkpoints must be strictly increasing and within range");
    }
  }
}

L1Result l1_from_rows(const std::vector<std::vector<double>>& rows,  // per draw: w, then |r - X| per checkpoint
                      std::span<const std::size_t> n, std::vector<double> mu) {
  const std::size_t N = rows.size();
  std::vector<double> weights(N);
  for (std::size_t i = 0; i < N; ++i) weights[i] = rows[i][0];
  std::vector<std::vector<double>> terms(n.size(), std::vector<double>(N));
  L1Result out;
  out.n.assign(n.begin(), n.end());
  out.mu = std::move(mu);
  for (std::size_t c = 0; c < n.size(); ++c) {
    for (std::size_t i = 0; i < N; ++i) terms[c][i] = rows[i][0] * rows[i][c + 1];
    out.errors.push_back(mean_estimate(terms[c], weights));
  }
  out.trend = trend_report(terms, n, out.errors);
  return out;
}

}  // namespace

L1Result l1_convergence(const MeasureModel& model, const MuSequence& ms,
                        std::span<const std::size_t> checkpoints, std::size_t draws,
                        const SimContext& ctx) {
  check_checkpoints(checkpoints, ms.size());
  std::vector<IntervalSet> sets;
  std::vector<double> mu;
  for (std::size_t n : checkpoints) {
    sets.push_back(ms.sets()[n - 1]);
    mu.push_back(ms.measures()[n - 1]);
  }
  const IntervalSet window = sets.back();
  const auto rows = simulate(draws, ctx.derive(lane_tag::kDraws), [&](std::size_t, Stream& rng) {
    const MeasureSample s = model.sample(window, rng);
    std::vector<double> row{s.weight};
    for (std::size_t c = 0; c < sets.size(); ++c) {
      row.push_back(std::fabs(evaluate(s, sets[c]) / mu[c] - s.aux_x));
    }
    return row;
  });
  return l1_from_rows(rows, checkpoints, std::move(mu));
}

L1Result l1_convergence(const SequenceModel& model, std::span<const std::size_t> prefix_lengths,
                        std::size_t draws, const SimContext& ctx) {
  check_checkpoints(prefix_lengths, static_cast<std::size_t>(-1));
  const std::size_t n_max = prefix_lengths.back();
  const auto rows = simulate(draws, ctx.derive(lane_tag::kDraws), [&](std::size_t, Stream& rng) {
    const SequenceSample s = model.sample(n_max, rng);
    const std::vector<double> path = sequence_ergodic_path(s);
    std::vector<double> row{s.weight};
    for (std::size_t n : prefix_lengths) row.push_back(std::fabs(path[n - 1] - s.aux_x));
    return row;
  });
  std::vector<double> mu(prefix_lengths.begin(), prefix_lengths.end());
  return l1_from_rows(rows, prefix_lengths, std::move(mu));
}

RepresentationCheck extract_eta(const MeasureSample& sample, std::span<const IntervalSet> sets) {
  check_equal_measure(sets);
  if (sample.aux_x < 0.0) throw DomainError("X must be nonnegative");
  RepresentationCheck c;
  c.q_weight = sample.weight * sample.aux_x;
  for (const auto& s : sets) {
    c.eta_values.push_back(sample.aux_x > 0.0 ? evaluate(sample, s) / sample.aux_x : 0.0);
  }
  return c;
}

RepresentationCheck extract_eta(const SequenceSample& sample, std::size_t k,
                                std::optional<double> limit) {
  if (k == 0 || k > sample.values.size()) throw DomainError("k must be in [1, prefix length]");
  const double x = limit.value_or(sample.aux_x);
  if (x < 0.0) throw DomainError("X must be nonnegative");
  RepresentationCheck c;
  c.q_weight = sample.weight * x;
  for (std::size_t j = 0; j < k; ++j) c.eta_values.push_back(x > 0.0 ? sample.values[j] / x : 0.0);
  return c;
}

double normalize_q_weights(std::vector<RepresentationCheck>& checks) {
  if (checks.empty()) throw DomainError("no draws to normalize");
  double mean = 0.0;
  for (const auto& c : checks) mean += c.q_weight;
  mean /= double(checks.size());
  if (!(mean > 0.0) || !std::isfinite(mean)) throw DomainError("mean Q-weight must be positive");
  for (auto& c : checks) c.q_weight /= mean;
  return mean;
}

RepresentationResult verify_representation(const SequenceModel& model, std::size_t k,
                                           std::optional<double> p, std::size_t draws,
                                           const SimContext& ctx,
                                           const RepresentationOptions& options) {
  if (k == 0) throw DomainError("k must be positive");
  if (p && !(*p >= 1.0)) throw DomainError("p must be at least 1");
  const bool terminal = options.source == LimitSource::TerminalRatio;
  const std::size_t length = terminal ? std::max(k, options.terminal_length) : k;

  struct Row {
    RepresentationCheck check;
    double weight = 1.0;
    double bias = 0.0;
  };
  auto rows = simulate(draws, ctx.derive(lane_tag::kDraws), [&](std::size_t, Stream& rng) {
    SequenceSample s = model.sample(length, rng);
    double exact = s.aux_x;
    if (p) {
      auto lim = model.norm_limit(s, *p);
      if (!lim) throw DomainError("model has no closed-form p-norm limit; use the terminal source");
      exact = *lim;
    }
    double x = exact;
    if (terminal) x = p ? p_norm_path(s, *p).back() : sequence_ergodic_path(s).back();
    return Row{extract_eta(s, k, x), s.weight, x - exact};
  });

  std::vector<RepresentationCheck> checks;
  double bias = 0.0;
  double wsum = 0.0;
  for (auto& r : rows) {
    bias += r.weight * r.bias;
    wsum += r.weight;
    checks.push_back(std::move(r.check));
  }
  RepresentationResult out = finish(checks, k, ctx, options);
  if (terminal) out.limit_bias = bias / wsum;
  return out;
}

RepresentationResult verify_representation(const MeasureModel& model,
                                           std::span<const IntervalSet> sets, std::size_t draws,
                                           const SimContext& ctx,
                                           const RepresentationOptions& options) {
  check_equal_measure(sets);
  const bool terminal = options.source == LimitSource::TerminalRatio;
  IntervalSet window;
  for (const auto& s : sets) window = set_union(window, s);
  const double T = double(options.terminal_length);
  const IntervalSet tail = IntervalSet::single(0.0, T);
  if (terminal) window = set_union(window, tail);

  struct Row {
    RepresentationCheck check;
    double weight = 1.0;
    double bias = 0.0;
  };
  auto rows = simulate(draws, ctx.derive(lane_tag::kDraws), [&](std::size_t, Stream& rng) {
    MeasureSample s = model.sample(window, rng);
    double bias = 0.0;
    if (terminal) {
      const double x = evaluate(s, tail) / T;
      bias = x - s.aux_x;
      s.aux_x = x;
    }
    return Row{extract_eta(s, sets), s.weight, bias};
  });

  std::vector<RepresentationCheck> checks;
  double bias = 0.0;
  double wsum = 0.0;
  for (auto& r : rows) {
    bias += r.weight * r.bias;
    wsum += r.weight;
    checks.push_back(std::move(r.check));
  }
  RepresentationResult out = finish(checks, sets.size(), ctx, options);
  if (terminal) out.limit_bias = bias / wsum;
  return out;
}

TestReport exchangeable_ergodic(const MeasureModel& model, const MuSequence& a,
                                const MuSequence& b, std::size_t draws, const SimContext& ctx) {
  if (!a.prefix_type()) throw DomainError("the first mu-sequence must be prefix-type");
  const MuSequence unit = csci(a, 1.0);
  IntervalSet window = set_union(set_union(a.last(), b.last()), unit.last());
  const double mu_a = a.measures().back();
  const double mu_b = b.measures().back();

  struct Row {
    double weight, diff, s2;
  };
  const auto rows = simulate(draws, ctx.derive(lane_tag::kDraws), [&](std::size_t, Stream& rng) {
    const MeasureSample s = model.sample(window, rng);
    const double ra = evaluate(s, a.last()) / mu_a;
    const double rb = evaluate(s, b.last()) / mu_b;
    // within-path variance of unit increments
    double prev = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;
    const auto& sets = unit.sets();
    for (const auto& c : sets) {
      const double cur = evaluate(s, c);
      const double inc = cur - prev;
      prev = cur;
      sum += inc;
      sumsq += inc * inc;
    }
    const double m = double(sets.size());
    const double s2 = m > 1 ? std::max(0.0, (sumsq - sum * sum / m) / (m - 1.0)) : 0.0;
    return Row{s.weight, std::fabs(ra - rb), s2};
  });

  std::vector<double> weights;
  std::vector<double> terms;
  double s2 = 0.0;
  double wsum = 0.0;
  for (const auto& r : rows) {
    weights.push_back(r.weight);
    terms.push_back(r.weight * r.diff);
    s2 += r.weight * r.s2;
    wsum += r.weight;
  }
  s2 /= wsum;
  const Estimate e = mean_estimate(terms, weights);
  const double threshold = 4.0 * std::sqrt(s2 * (1.0 / mu_a + 1.0 / mu_b)) + 4.0 * e.se;
  TestReport r = make_report("limit-uniqueness", e.value, threshold);
  r.n_samples = e.n_samples;
  r.ess = e.ess;
  r.extra["mean_abs_difference"] = e;
  r.extra["unit_increment_variance"] = s2;
  r.extra["mu_a"] = mu_a;
  r.extra["mu_b"] = mu_b;
  for (const MuSequence* ms : {&a, &b}) {
    const auto inf = complement_of_limit_infinite(*ms);
    if (!inf) {
      r.notes.push_back("complement of the limit set not checked: sequence is not prefix-type");
    } else if (!*inf) {
      r.notes.push_back("complement of the limit set has finite measure");
    }
  }
  return r;
}

}  // namespace swapzon
