#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "estimate.hpp"
#include "interval_set.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "zonoid_stats.hpp"

namespace swapzon {

/// r_n = xi(A_n) / mu(A_n) along a mu-sequence, with the draw's X.
struct ErgodicPath {
  std::vector<double> ratios;
  std::vector<double> mu_values;
  double aux_x = 1.0;
};

/// Throws DomainError when an atomic sample's window does not cover the last set.
ErgodicPath ergodic_path(const MeasureSample& sample, const MuSequence& ms);
/// Draws one sample on the last set of `ms` and evaluates the path.
ErgodicPath ergodic_path(const MeasureModel& model, const MuSequence& ms, Stream& stream);

/// Partial means n^-1 sum_{j<=n} x_j.
std::vector<double> sequence_ergodic_path(const SequenceSample& s);
/// Running p-norms (n^-1 sum |x_j|^p)^(1/p); p = inf gives the running max of |x_j|.
std::vector<double> p_norm_path(const SequenceSample& s, double p);

/// max_{n >= n0} |r_n - r_last| for each n0 (1-based positions into the path).
std::vector<double> tail_oscillation(std::span<const double> path, std::span<const std::size_t> n0);

struct L1Result {
  std::vector<std::size_t> n;   // checkpoints
  std::vector<double> mu;        // mu(A_n) at the checkpoints
  std::vector<Estimate> errors;  // E_P |r_n - X|
  TestReport trend;              // max standardized increase between consecutive checkpoints
};

/// Checkpoints are 1-based indices into `ms`, strictly increasing.
L1Result l1_convergence(const MeasureModel& model, const MuSequence& ms,
                        std::span<const std::size_t> checkpoints, std::size_t draws,
                        const SimContext& ctx);
/// Partial means at the given prefix lengths.
L1Result l1_convergence(const SequenceModel& model, std::span<const std::size_t> prefix_lengths,
                        std::size_t draws, const SimContext& ctx);

/// eta values of one draw and its unnormalized Q-weight w * X.
struct RepresentationCheck {
  std::vector<double> eta_values;
  double q_weight = 0.0;
};

/// eta(A_j) = xi(A_j) / X on {X > 0}, 0 on {X = 0}. Sets must be disjoint
/// with equal Lebesgue measure. Throws DomainError if X < 0.
RepresentationCheck extract_eta(const MeasureSample& sample, std::span<const IntervalSet> sets);
/// First k coordinates divided by `limit` (defaults to aux_x).
RepresentationCheck extract_eta(const SequenceSample& sample, std::size_t k,
                                std::optional<double> limit = std::nullopt);

/// Divides every q_weight by the batch mean. Throws DomainError if the mean is not positive.
double normalize_q_weights(std::vector<RepresentationCheck>& checks);

enum class LimitSource { Aux, TerminalRatio };

struct RepresentationOptions {
  LimitSource source = LimitSource::Aux;
  std::size_t terminal_length = 10000;  // prefix length / mu(A_N) for TerminalRatio
  ExchangeabilityOptions exchangeability;
};

struct RepresentationResult {
  TestReport exchangeability;  // eta under Q-weights
  TestReport q_vs_base;        // RMS(q - 1) against 4 / sqrt(N)
  double q_mean_raw = 0.0;     // batch mean of w * X before normalization
  std::optional<double> limit_bias;  // weighted mean of (terminal ratio - aux_x)
};

/// Sequence form: X = aux_x (or the terminal partial mean), or with `p` the
/// closed-form p-norm limit when the model has one (else the terminal p-norm).
RepresentationResult verify_representation(const SequenceModel& model, std::size_t k,
                                           std::optional<double> p, std::size_t draws,
                                           const SimContext& ctx,
                                           const RepresentationOptions& options = {});
/// Measure form on disjoint equal-measure sets; the terminal ratio uses
/// prefixes of [0, inf) of measure terminal_length.
RepresentationResult verify_representation(const MeasureModel& model,
                                           std::span<const IntervalSet> sets, std::size_t draws,
                                           const SimContext& ctx,
                                           const RepresentationOptions& options = {});

/// Terminal ratios along two mu-sequences for an exchangeable model.
/// statistic = E_P |r_A - r_B|; threshold = 4 sqrt(s2 (1/mu(A_N) + 1/mu(B_N))) + 4 SE,
/// with s2 the mean within-path variance of unit increments along the CSCI
/// of `a`. `a` must be prefix-type.
TestReport exchangeable_ergodic(const MeasureModel& model, const MuSequence& a,
                                const MuSequence& b, std::size_t draws, const SimContext& ctx);

}  // namespace swapzon
