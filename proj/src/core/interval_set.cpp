#include "interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace swapzon {

IntervalSet IntervalSet::normalize(std::vector<Interval> raw) {
  for (const auto& iv : raw) {
    if (std::isnan(iv.lo) || std::isnan(iv.hi))
      throw DomainError("interval endpoint is NaN");
    if (iv.lo < 0.0 || !std::isfinite(iv.lo))
      throw DomainError("interval lower endpoint must be finite and >= 0, got " +
                        std::to_string(iv.lo));
    if (!(iv.lo < iv.hi))
      throw DomainError("interval requires lo < hi, got [" + std::to_string(iv.lo) + ", " +
                        std::to_string(iv.hi) + ")");
  }
  std::sort(raw.begin(), raw.end(),
            [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  IntervalSet out;
  for (const auto& iv : raw) {
    if (!out.intervals_.empty() && iv.lo <= out.intervals_.back().hi) {
      out.intervals_.back().hi = std::max(out.intervals_.back().hi, iv.hi);
    } else {
      out.intervals_.push_back(iv);
    }
  }
  return out;
}

IntervalSet normalize(std::vector<Interval> raw) { return IntervalSet::normalize(std::move(raw)); }

bool IntervalSet::contains(double x) const {
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  if (it == intervals_.begin()) return false;
  --it;
  return x < it->hi;
}

double lebesgue(const IntervalSet& s) {
  double total = 0.0;
  for (const auto& iv : s.intervals()) total += iv.hi - iv.lo;
  return total;
}

namespace {

std::vector<Interval> intersect_raw(std::span<const Interval> a, std::span<const Interval> b) {
  std::vector<Interval> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].lo, b[j].lo);
    const double hi = std::min(a[i].hi, b[j].hi);
    if (lo < hi) out.push_back({lo, hi});
    if (a[i].hi < b[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

// Complement within [0, inf).
std::vector<Interval> complement_raw(std::span<const Interval> a) {
  std::vector<Interval> out;
  double cursor = 0.0;
  for (const auto& iv : a) {
    if (cursor < iv.lo) out.push_back({cursor, iv.lo});
    cursor = iv.hi;
  }
  if (cursor != kInf) out.push_back({cursor, kInf});
  return out;
}

}  // namespace

IntervalSet combine(const IntervalSet& a, const IntervalSet& b, SetOp op) {
  switch (op) {
    case SetOp::Union: {
      std::vector<Interval> all(a.intervals().begin(), a.intervals().end());
      all.insert(all.end(), b.intervals().begin(), b.intervals().end());
      return normalize(std::move(all));
    }
    case SetOp::Intersect:
      return normalize(intersect_raw(a.intervals(), b.intervals()));
    case SetOp::Difference: {
      const auto comp = complement_raw(b.intervals());
      return normalize(intersect_raw(a.intervals(), comp));
    }
  }
  throw InvariantError("combine: unknown set operation");
}

bool is_subset(const IntervalSet& a, const IntervalSet& b) {
  return set_difference(a, b).empty();
}

bool disjoint(const IntervalSet& a, const IntervalSet& b) { return set_intersect(a, b).empty(); }

bool pairwise_disjoint(std::span<const IntervalSet> sets) {
  std::vector<Interval> all;
  for (const auto& s : sets) all.insert(all.end(), s.intervals().begin(), s.intervals().end());
  std::sort(all.begin(), all.end(),
            [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].lo < all[i - 1].hi) return false;
  return true;
}

IntervalSet prefix(const IntervalSet& region, double t) {
  if (!(t >= 0.0)) throw DomainError("prefix: t must be >= 0");
  const double available = lebesgue(region);
  if (t > available)
    throw DomainError("prefix: requested measure " + std::to_string(t) +
                      " exceeds region measure " + std::to_string(available));
  std::vector<Interval> out;
  double remaining = t;
  for (const auto& iv : region.intervals()) {
    if (remaining <= 0.0) break;
    const double len = iv.hi - iv.lo;
    if (remaining >= len) {
      out.push_back(iv);
      remaining -= len;
    } else {
      out.push_back({iv.lo, iv.lo + remaining});
      remaining = 0.0;
    }
  }
  return normalize(std::move(out));
}

MuSequence MuSequence::from_sets(std::vector<IntervalSet> sets) {
  if (sets.empty()) throw DomainError("mu-sequence needs at least one set");
  MuSequence ms;
  for (std::size_t n = 0; n < sets.size(); ++n) {
    const double m = lebesgue(sets[n]);
    if (!std::isfinite(m) || !(m > 0.0))
      throw DomainError("mu-sequence sets need finite positive measure");
    if (n > 0) {
      if (!is_subset(sets[n - 1], sets[n])) throw DomainError("mu-sequence sets must be nested");
      if (!(m > ms.measures_.back()))
        throw DomainError("mu-sequence measures must be strictly increasing");
    }
    ms.measures_.push_back(m);
  }
  ms.sets_ = std::move(sets);
  return ms;
}

MuSequence mu_sequence(const IntervalSet& region, std::span<const double> schedule) {
  if (region.bounded()) throw DomainError("mu_sequence: region must have infinite measure");
  if (schedule.empty()) throw DomainError("mu_sequence: empty schedule");
  MuSequence ms;
  double previous = 0.0;
  for (double t : schedule) {
    if (!std::isfinite(t) || !(t > previous))
      throw DomainError("mu_sequence: schedule must be positive, finite and strictly increasing");
    previous = t;
    ms.sets_.push_back(prefix(region, t));
    ms.measures_.push_back(lebesgue(ms.sets_.back()));
  }
  ms.region_ = region;
  return ms;
}

MuSequence mu_sequence(const IntervalSet& region, double increment, std::size_t count) {
  if (!(increment > 0.0) || !std::isfinite(increment))
    throw DomainError("mu_sequence: increment must be positive and finite");
  if (count == 0) throw DomainError("mu_sequence: count must be >= 1");
  std::vector<double> schedule(count);
  for (std::size_t n = 0; n < count; ++n) schedule[n] = static_cast<double>(n + 1) * increment;
  return mu_sequence(region, schedule);
}

std::vector<IntervalSet> delta_increments(const MuSequence& ms) {
  std::vector<IntervalSet> out;
  out.reserve(ms.size());
  const auto& sets = ms.sets();
  for (std::size_t n = 0; n < sets.size(); ++n)
    out.push_back(n == 0 ? sets[0] : set_difference(sets[n], sets[n - 1]));
  return out;
}

MuSequence csci(const MuSequence& ms, double c) {
  if (!ms.prefix_type())
    throw DomainError("csci: only prefix-type mu-sequences are supported");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("csci: c must be positive");
  const double target = ms.measures().back();
  auto count = static_cast<std::size_t>(std::ceil(target / c));
  if (count == 0) count = 1;
  while (static_cast<double>(count) * c < target) ++count;
  return mu_sequence(*ms.region(), c, count);
}

std::optional<bool> complement_of_limit_infinite(const MuSequence& ms) {
  if (!ms.prefix_type()) return std::nullopt;
  return lebesgue(set_difference(IntervalSet::half_line(), *ms.region())) == kInf;
}

namespace {

nlohmann::json endpoint_json(double v) {
  if (v == kInf) return "inf";
  return v;
}

double endpoint_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return kInf;
    throw DomainError("interval endpoint string must be \"inf\", got \"" + s + "\"");
  }
  if (!j.is_number()) throw DomainError("interval endpoint must be a number or \"inf\"");
  return j.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const IntervalSet& s) {
  j = nlohmann::json::array();
  for (const auto& iv : s.intervals())
    j.push_back(nlohmann::json::array({endpoint_json(iv.lo), endpoint_json(iv.hi)}));
}

void from_json(const nlohmann::json& j, IntervalSet& s) {
  if (!j.is_array()) throw DomainError("interval set must be a JSON array of [lo, hi] pairs");
  std::vector<Interval> raw;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw DomainError("interval must be a two-element array [lo, hi]");
    raw.push_back({endpoint_from_json(pair[0]), endpoint_from_json(pair[1])});
  }
  s = IntervalSet::normalize(std::move(raw));
}

}  // namespace swapzon
