#include "estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "errors.hpp"
#include "format.hpp"

namespace swapzon {

Estimate mean_estimate(std::span<const double> terms, std::span<const double> weights) {
  Estimate e;
  e.n_samples = terms.size();
  if (terms.empty()) return e;
  const double n = static_cast<double>(terms.size());
  double mean = 0.0;
  for (double t : terms) mean += t;
  mean /= n;
  double ss = 0.0;
  for (double t : terms) ss += (t - mean) * (t - mean);
  e.value = mean;
  e.se = terms.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  e.ess = weights.empty() ? n : effective_sample_size(weights);
  return e;
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  if (s2 == 0.0) return 0.0;
  // Guard the ess <= n invariant against rounding.
  return std::min(s * s / s2, static_cast<double>(weights.size()));
}

TestReport make_report(std::string name, double statistic, double threshold) {
  TestReport r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.threshold = threshold;
  r.verdict = statistic <= threshold ? Verdict::Pass : Verdict::Reject;
  return r;
}

double z_score(double mean, double se) {
  if (se > 0.0) return std::fabs(mean) / se;
  return mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

namespace {

// JSON has no infinity; keep such values readable and round-trippable.
nlohmann::json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

void to_json(nlohmann::json& j, const Estimate& e) {
  j = {{"estimate", number_json(e.value)},
       {"se", number_json(e.se)},
       {"ess", number_json(e.ess)},
       {"n_samples", e.n_samples}};
}

void to_json(nlohmann::json& j, const TestReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.details) {
    rows.push_back({{"comparison_id", row.id},
                    {"value_lhs", number_json(row.lhs)},
                    {"value_rhs", number_json(row.rhs)},
                    {"paired_se", number_json(row.paired_se)},
                    {"z_score", number_json(row.z)},
                    {"verdict", row.pass ? "pass" : "reject"}});
  }
  j = {{"name", r.name},
       {"statistic", number_json(r.statistic)},
       {"threshold", number_json(r.threshold)},
       {"verdict", r.passed() ? "pass" : "reject"},
       {"n_samples", r.n_samples},
       {"ess", number_json(r.ess)},
       {"details", rows}};
  if (!r.notes.empty()) j["notes"] = r.notes;
  if (!r.extra.empty()) j["extra"] = r.extra;
}

void write_report_csv(std::ostream& out, const TestReport& r) {
  out << "comparison_id,value_lhs,value_rhs,paired_se,z_score,verdict,ess,n_samples\n";
  for (const auto& row : r.details) {
    out << csv_row({row.id, format_double(row.lhs), format_double(row.rhs),
                    format_double(row.paired_se), format_double(row.z),
                    row.pass ? "pass" : "reject", format_double(r.ess),
                    std::to_string(r.n_samples)});
  }
}

void write_estimates_csv(std::ostream& out, std::span<const std::string> ids,
                         std::span<const Estimate> estimates) {
  if (ids.size() != estimates.size()) throw InvariantError("estimates CSV: id count mismatch");
  out << "id,estimate,se,ess,n_samples\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& e = estimates[i];
    out << csv_row({ids[i], format_double(e.value), format_double(e.se), format_double(e.ess),
                    std::to_string(e.n_samples)});
  }
}

}  // namespace swapzon
