#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "interval_set.hpp"
#include "json.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace swapzon {

/// One draw of a random sequence prefix under the sampling measure, with the
/// density of the target measure attached.
struct SequenceSample {
  std::vector<double> values;
  double aux_x = 1.0;   // scaling / ergodic variable; 1 when the model has none
  double weight = 1.0;  // dP/dQ at the draw
};

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

/// One sample path of a random measure: weighted atoms plus diffuse_coeff * Lebesgue.
class MeasureRealization {
 public:
  MeasureRealization() : cumulative_{0.0} {}
  /// Atoms must have strictly increasing locations >= 0 and positive masses.
  MeasureRealization(std::vector<Atom> atoms, double diffuse_coeff);

  [[nodiscard]] std::span<const Atom> atoms() const { return atoms_; }
  [[nodiscard]] double diffuse_coeff() const { return diffuse_coeff_; }
  /// Total mass of atoms located in [lo, hi).
  [[nodiscard]] double atom_mass(double lo, double hi) const;
  [[nodiscard]] MeasureRealization scaled(double factor) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;  // cumulative_[i] = mass of atoms_[0..i)
  double diffuse_coeff_ = 0.0;
};

struct MeasureSample {
  MeasureRealization realization;
  IntervalSet window;   // region on which atoms were generated
  double aux_x = 1.0;
  double weight = 1.0;
  bool atomic = true;   // false for purely diffuse models: window is irrelevant
};

/// xi(s): atom masses in s plus diffuse_coeff * lebesgue(s).
double evaluate(const MeasureRealization& r, const IntervalSet& s);
/// As above, but throws DomainError when an atom-bearing sample is evaluated
/// outside its window.
double evaluate(const MeasureSample& sample, const IntervalSet& s);

/// Realization as CSV: a `diffuse_coeff,<value>` line, then `location,mass` rows.
void write_realization_csv(std::ostream& out, const MeasureRealization& r);

/// Exact finite-dimensional pmf: support points with their probabilities.
struct ExactPmf {
  std::vector<std::vector<double>> support;
  std::vector<double> probs;

  /// Probability that coordinate j equals v.
  [[nodiscard]] double marginal(std::size_t j, double v) const;
};

struct ModelSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

class SequenceModel {
 public:
  using Sampler = std::function<SequenceSample(std::size_t n, Stream&)>;
  using PmfFunction = std::function<std::optional<ExactPmf>(std::size_t n)>;
  /// Closed-form limit of the running p-norm for a draw, if known.
  using NormLimit = std::function<std::optional<double>(const SequenceSample&, double p)>;

  SequenceModel(ModelSpec spec, Sampler sampler, bool nonnegative = false);

  [[nodiscard]] const ModelSpec& spec() const { return spec_; }
  [[nodiscard]] const std::string& name() const { return spec_.name; }
  [[nodiscard]] bool nonnegative() const { return nonnegative_; }

  /// Draws a prefix of length n (n >= 1).
  [[nodiscard]] SequenceSample sample(std::size_t n, Stream& stream) const;
  [[nodiscard]] std::optional<ExactPmf> exact_pmf(std::size_t n) const;
  [[nodiscard]] std::optional<double> norm_limit(const SequenceSample& s, double p) const;

  [[nodiscard]] SequenceModel with_exact_pmf(PmfFunction pmf) const;
  [[nodiscard]] SequenceModel with_norm_limit(NormLimit limit) const;
  [[nodiscard]] SequenceModel with_spec(ModelSpec spec) const;

 private:
  ModelSpec spec_;
  std::shared_ptr<const Sampler> sampler_;
  PmfFunction pmf_;
  NormLimit norm_limit_;
  bool nonnegative_ = false;
};

class MeasureModel {
 public:
  using Sampler = std::function<MeasureSample(const IntervalSet& window, Stream&)>;

  MeasureModel(ModelSpec spec, Sampler sampler, bool atomic, IntervalSet required_window = {});

  [[nodiscard]] const ModelSpec& spec() const { return spec_; }
  [[nodiscard]] const std::string& name() const { return spec_.name; }
  [[nodiscard]] bool atomic() const { return atomic_; }
  /// Region the sampler always adds to the window (e.g. the set X depends on).
  [[nodiscard]] const IntervalSet& required_window() const { return required_window_; }

  /// Draws on the window (plus required_window). Throws DomainError on an
  /// unbounded window.
  [[nodiscard]] MeasureSample sample(const IntervalSet& window, Stream& stream) const;
  [[nodiscard]] MeasureModel with_spec(ModelSpec spec) const;

 private:
  ModelSpec spec_;
  std::shared_ptr<const Sampler> sampler_;
  bool atomic_ = true;
  IntervalSet required_window_;
};

using Model = std::variant<SequenceModel, MeasureModel>;

SequenceSample sample_sequence(const SequenceModel& model, std::size_t n, Stream& stream);
MeasureSample sample_measure(const MeasureModel& model, const IntervalSet& window, Stream& stream);

/// X as a function of a base draw.
struct SequenceScaling {
  std::string description;
  std::function<double(const SequenceSample&)> x;
  std::size_t min_prefix = 1;  // coordinates X needs
};

struct MeasureScaling {
  std::string description;
  std::function<double(const MeasureSample&)> x;
  IntervalSet required_window;  // region X depends on
};

/// xi_j = X eta_j with dP/dQ = 1 / (c |X|), c = E_Q[1/|X|].
/// Throws DomainError if c <= 0; sampling throws DomainError when X = 0.
SequenceModel swap_from_base(const SequenceModel& base, SequenceScaling scaling, double c,
                             std::string name = {});
/// xi = X eta for random measures, with the same density. Requires X > 0.
MeasureModel swap_measure_from_base(const MeasureModel& base, MeasureScaling scaling, double c,
                                    std::string name = {});

/// Pre-pass estimate of E_Q[1/|X|] (base weights included).
struct InverseMoment {
  double value = 0.0;
  double se = 0.0;
};
InverseMoment estimate_inverse_moment(const SequenceModel& base, const SequenceScaling& scaling,
                                      std::size_t draws, const SimContext& ctx);
InverseMoment estimate_inverse_moment(const MeasureModel& base, const MeasureScaling& scaling,
                                      std::size_t draws, const SimContext& ctx);

inline constexpr std::size_t kDefaultPrepassDraws = 100000;

struct CatalogEntry {
  std::string name;
  std::string kind;     // "sequence" | "measure"
  std::string example;  // worked example the model implements
  std::string summary;
  nlohmann::json params;  // parameter name -> description with default
};

/// Catalog in alphabetical order.
const std::vector<CatalogEntry>& catalog();

/// Builds a fully parameterized built-in model. Throws ConfigError for an
/// unknown name and DomainError for invalid parameters. `ctx` seeds the
/// pre-pass when a parameter asks for c = "estimate".
Model builtin(const ModelSpec& spec, const SimContext& ctx = {});
SequenceModel builtin_sequence(const ModelSpec& spec, const SimContext& ctx = {});
MeasureModel builtin_measure(const ModelSpec& spec, const SimContext& ctx = {});

}  // namespace swapzon
