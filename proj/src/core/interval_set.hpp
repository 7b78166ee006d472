#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace swapzon {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Half-open interval [lo, hi) on the nonnegative half-line; hi may be +inf.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite disjoint union of half-open intervals, sorted and non-adjacent.
/// Adjacency is exact endpoint equality; endpoints are never rounded.
class IntervalSet {
 public:
  IntervalSet() = default;

  /// Sorts and merges overlapping or touching intervals.
  /// Throws DomainError on lo >= hi, negative or non-finite lo, NaN.
  static IntervalSet normalize(std::vector<Interval> raw);
  static IntervalSet single(double lo, double hi) { return normalize({{lo, hi}}); }
  static IntervalSet half_line() { return single(0.0, kInf); }

  [[nodiscard]] std::span<const Interval> intervals() const { return intervals_; }
  [[nodiscard]] std::size_t size() const { return intervals_.size(); }
  [[nodiscard]] bool empty() const { return intervals_.empty(); }
  [[nodiscard]] bool bounded() const { return empty() || intervals_.back().hi != kInf; }
  [[nodiscard]] bool contains(double x) const;

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Interval> intervals_;
};

IntervalSet normalize(std::vector<Interval> raw);

/// Lebesgue measure; +inf iff the last interval is unbounded.
double lebesgue(const IntervalSet& s);

enum class SetOp { Union, Intersect, Difference };

IntervalSet combine(const IntervalSet& a, const IntervalSet& b, SetOp op);
inline IntervalSet set_union(const IntervalSet& a, const IntervalSet& b) {
  return combine(a, b, SetOp::Union);
}
inline IntervalSet set_intersect(const IntervalSet& a, const IntervalSet& b) {
  return combine(a, b, SetOp::Intersect);
}
inline IntervalSet set_difference(const IntervalSet& a, const IntervalSet& b) {
  return combine(a, b, SetOp::Difference);
}

bool is_subset(const IntervalSet& a, const IntervalSet& b);
bool disjoint(const IntervalSet& a, const IntervalSet& b);
/// True iff the sets are pairwise disjoint.
bool pairwise_disjoint(std::span<const IntervalSet> sets);

/// Leftmost subset of `region` with Lebesgue measure t.
/// Throws DomainError if t < 0 or t > lebesgue(region).
IntervalSet prefix(const IntervalSet& region, double t);

/// Increasing family of sets with finite, strictly increasing measures.
class MuSequence {
 public:
  /// Validates nesting and strictly increasing finite measures.
  static MuSequence from_sets(std::vector<IntervalSet> sets);

  [[nodiscard]] const std::vector<IntervalSet>& sets() const { return sets_; }
  [[nodiscard]] const std::vector<double>& measures() const { return measures_; }
  [[nodiscard]] std::size_t size() const { return sets_.size(); }
  /// Set when the sequence was built as prefixes of an infinite region.
  [[nodiscard]] const std::optional<IntervalSet>& region() const { return region_; }
  [[nodiscard]] bool prefix_type() const { return region_.has_value(); }
  [[nodiscard]] const IntervalSet& last() const { return sets_.back(); }

 private:
  friend MuSequence mu_sequence(const IntervalSet& region, std::span<const double> schedule);
  std::vector<IntervalSet> sets_;
  std::vector<double> measures_;
  std::optional<IntervalSet> region_;
};

/// A_n = prefix(region, n * c) for n = 1..count.
MuSequence mu_sequence(const IntervalSet& region, double increment, std::size_t count);
/// A_n = prefix(region, t_n) for a strictly increasing positive schedule.
MuSequence mu_sequence(const IntervalSet& region, std::span<const double> schedule);

/// dA_1 = A_1, dA_n = A_n \ A_{n-1}.
std::vector<IntervalSet> delta_increments(const MuSequence& ms);

/// Constant-increment prefix sequence C_n = prefix(region, n * c), long enough
/// that C_M covers the last set of `ms`. Every A_k and C_m are nested one way
/// or the other. Only prefix-type input is supported.
MuSequence csci(const MuSequence& ms, double c);

/// For prefix-type sequences: whether the complement of the limit set has
/// infinite measure in the half-line. Always false on the half-line since the
/// region's last interval is unbounded; nullopt when not prefix-type.
std::optional<bool> complement_of_limit_infinite(const MuSequence& ms);

void to_json(nlohmann::json& j, const IntervalSet& s);
void from_json(const nlohmann::json& j, IntervalSet& s);

}  // namespace swapzon
