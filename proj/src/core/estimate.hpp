#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace swapzon {

/// Weighted Monte Carlo point estimate.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n_samples = 0;
  double ess = 0.0;  // (sum w)^2 / sum w^2
};

/// Mean of terms[i] (already multiplied by the weight) with plug-in SE; ESS
/// computed from `weights`.
Estimate mean_estimate(std::span<const double> terms, std::span<const double> weights);
double effective_sample_size(std::span<const double> weights);

enum class Verdict { Pass, Reject };

struct ComparisonRow {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double paired_se = 0.0;
  double z = 0.0;
  bool pass = true;
};

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::Pass;
  std::vector<ComparisonRow> details;
  std::size_t n_samples = 0;
  double ess = 0.0;
  std::vector<std::string> notes;
  nlohmann::json extra = nlohmann::json::object();

  [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
};

/// verdict = pass iff statistic <= threshold.
TestReport make_report(std::string name, double statistic, double threshold);

/// |mean| / se with 0/0 = 0 and x/0 = inf.
double z_score(double mean, double se);

void to_json(nlohmann::json& j, const Estimate& e);
void to_json(nlohmann::json& j, const TestReport& r);

/// Columns: comparison_id,value_lhs,value_rhs,paired_se,z_score,verdict,ess,n_samples
void write_report_csv(std::ostream& out, const TestReport& r);
/// Columns: id,estimate,se,ess,n_samples
void write_estimates_csv(std::ostream& out, std::span<const std::string> ids,
                         std::span<const Estimate> estimates);

}  // namespace swapzon
