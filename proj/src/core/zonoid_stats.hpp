#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "estimate.hpp"
#include "interval_set.hpp"
#include "models.hpp"
#include "parallel.hpp"

namespace swapzon {

/// N weighted draws of a dim-vector, row-major.
struct WeightedData {
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<double> aux;

  [[nodiscard]] std::size_t rows() const { return weights.size(); }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
};

/// N prefixes of length n.
WeightedData draw_sequences(const SequenceModel& model, std::size_t n, std::size_t draws,
                            const SimContext& ctx);
/// Rows (xi(A_1), ..., xi(A_k)) with the window set to the union of the sets.
/// Throws DomainError on overlapping or unbounded sets.
WeightedData draw_set_values(const MeasureModel& model, std::span<const IntervalSet> sets,
                             std::size_t draws, const SimContext& ctx);

/// Weighted mean of w |<u, x>|.
Estimate zonoid_functional(const WeightedData& data, std::span<const double> u);
Estimate zonoid_functional(const SequenceModel& model, std::span<const double> u,
                           std::size_t draws, const SimContext& ctx);
Estimate zonoid_functional_sets(const MeasureModel& model, std::span<const IntervalSet> sets,
                                std::span<const double> u, std::size_t draws,
                                const SimContext& ctx);

struct SwapTestOptions {
  double threshold = 4.0;  // paired standard errors
  std::size_t random_directions = 20;
  std::size_t random_permutations = 5;
};

/// Unit vectors, sign vectors with first entry +1 (n <= 4) and random
/// Gaussian directions.
std::vector<std::vector<double>> default_u_grid(std::size_t n, std::size_t random_directions,
                                                const SimContext& ctx);

/// Paired comparison of E|<u, x>| and E|<u o pi, x>| for every u, every
/// transposition and a few random full permutations, on the same draws.
TestReport swap_invariance_test(const WeightedData& data,
                                std::span<const std::vector<double>> u_grid,
                                const SwapTestOptions& options, const SimContext& ctx);
/// Empty u_grid selects default_u_grid.
TestReport test_swap_invariance(const SequenceModel& model, std::size_t n,
                                std::vector<std::vector<double>> u_grid, std::size_t draws,
                                const SimContext& ctx, const SwapTestOptions& options = {});
TestReport test_swap_invariance_sets(const MeasureModel& model, std::span<const IntervalSet> sets,
                                     std::vector<std::vector<double>> u_grid, std::size_t draws,
                                     const SimContext& ctx, const SwapTestOptions& options = {});

struct ExchangeabilityOptions {
  double alpha = 0.01;
  std::size_t resamples = 199;
  std::size_t energy_subsample = 1000;
  std::size_t categorical_cap = 64;  // max distinct values for the categorical mode
};

/// Permutation test of exchangeability of the first k coordinates.
/// Categorical data: studentized pattern-frequency differences, chi-square
/// style, threshold from per-draw random coordinate permutations.
/// Continuous data: weighted energy distance between x and x o tau for each
/// transposition, threshold from random paired swaps.
TestReport exchangeability_test(const WeightedData& data, std::size_t k,
                                const ExchangeabilityOptions& options, const SimContext& ctx);
TestReport test_exchangeability(const SequenceModel& model, std::size_t k, std::size_t draws,
                                const SimContext& ctx, const ExchangeabilityOptions& options = {});
TestReport test_exchangeability_sets(const MeasureModel& model, std::span<const IntervalSet> sets,
                                     std::size_t draws, const SimContext& ctx,
                                     const ExchangeabilityOptions& options = {});

/// E max{xi_k : k in indices} (0-based, strictly increasing) for a model
/// with values in {a, b}. Throws DomainError on any other value.
Estimate max_functional(const SequenceModel& model, std::span<const std::size_t> indices,
                        double a, double b, std::size_t draws, const SimContext& ctx);

/// z(K) = E max{xi_k : k in K} for every nonempty K subset of {0..n-1}, keyed
/// by bitmask (bit j <-> coordinate j). z[0] is unused.
struct ZTable {
  std::size_t n = 0;
  double a = 0.0;
  double b = 1.0;
  std::vector<double> z;
  std::vector<double> covariance;  // 2^n x 2^n covariance of the z estimates; empty if exact
};

/// From index tuples (0-based, sorted) to values; every nonempty subset required.
ZTable make_z_table(std::size_t n, double a, double b,
                    const std::map<std::vector<std::size_t>, double>& z);
ZTable estimate_z_table(const SequenceModel& model, std::size_t n, double a, double b,
                        std::size_t draws, const SimContext& ctx);
/// Exact z table of a pmf supported on {a, b}^n.
ZTable z_table_from_pmf(const ExactPmf& pmf, std::size_t n, double a, double b);

/// pmf over {a, b}^n; probs[mask] for bit j set <-> coordinate j equals b.
struct JointPmf {
  std::size_t n = 0;
  double a = 0.0;
  double b = 1.0;
  std::vector<double> probs;
  double clip_mass = 0.0;
  std::vector<double> covariance;  // of probs before clipping; empty if exact

  [[nodiscard]] double prob(std::span<const double> pattern) const;
};

enum class ReconstructMode { Exact, Estimated };

/// P(all coordinates in K equal the lower value) = (hi - z(K)) / (hi - lo),
/// then every pattern by inclusion-exclusion over sub-tuples. Estimated mode
/// clips negative mass and renormalizes; exact mode rejects it.
JointPmf reconstruct_binary(const ZTable& z, ReconstructMode mode = ReconstructMode::Exact);

struct PmfCheckOptions {
  double exact_tolerance = 1e-6;
  double se_multiplier = 4.0;
};

/// max over patterns m and permutations pi of |p(m) - p(m o pi)|; studentized
/// when the pmf carries a covariance (estimated input).
TestReport check_exchangeable_pmf(const JointPmf& pmf, const PmfCheckOptions& options = {});

/// Coordinatewise absolute value; weight and aux_x unchanged.
SequenceModel abs_model(const SequenceModel& model);

struct IntensityResult {
  std::vector<Estimate> ratios;  // E_P xi(A) / lebesgue(A) per set
  TestReport equality;           // max paired |z| over set pairs
};

IntensityResult intensity_ratio(const MeasureModel& model, std::span<const IntervalSet> sets,
                                std::size_t draws, const SimContext& ctx,
                                double threshold = 4.0);

/// eta = xi / xi(S) under dQ = w xi(S) / E[w xi(S)], then the exchangeability
/// test on (eta(A_1), ..., eta(A_k)). Cells must partition `space` into
/// equal-measure sets.
TestReport finite_rep_check(const MeasureModel& model, const IntervalSet& space,
                            std::span<const IntervalSet> cells, std::size_t draws,
                            const SimContext& ctx, const ExchangeabilityOptions& options = {});

/// All permutations of {0..k-1} in lexicographic order (identity first).
std::vector<std::vector<std::size_t>> all_permutations(std::size_t k);

}  // namespace swapzon
