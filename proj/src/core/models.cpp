#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>

#include "errors.hpp"
#include "format.hpp"

namespace swapzon {

using nlohmann::json;

MeasureRealization::MeasureRealization(std::vector<Atom> atoms, double diffuse_coeff)
    : atoms_(std::move(atoms)), diffuse_coeff_(diffuse_coeff) {
  if (!(diffuse_coeff_ >= 0.0) || !std::isfinite(diffuse_coeff_))
    throw DomainError("diffuse coefficient must be finite and >= 0");
  cumulative_.reserve(atoms_.size() + 1);
  cumulative_.push_back(0.0);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const auto& a = atoms_[i];
    if (!(a.location >= 0.0) || !std::isfinite(a.location))
      throw DomainError("atom location must be finite and >= 0");
    if (!(a.mass > 0.0) || !std::isfinite(a.mass)) throw DomainError("atom mass must be positive");
    if (i > 0 && !(a.location > atoms_[i - 1].location))
      throw DomainError("atom locations must be strictly increasing");
    cumulative_.push_back(cumulative_.back() + a.mass);
  }
}

double MeasureRealization::atom_mass(double lo, double hi) const {
  auto by_location = [](const Atom& a, double x) { return a.location < x; };
  const auto first = std::lower_bound(atoms_.begin(), atoms_.end(), lo, by_location);
  const auto last = std::lower_bound(first, atoms_.end(), hi, by_location);
  return cumulative_[static_cast<std::size_t>(last - atoms_.begin())] -
         cumulative_[static_cast<std::size_t>(first - atoms_.begin())];
}

MeasureRealization MeasureRealization::scaled(double factor) const {
  if (!(factor > 0.0)) throw DomainError("measure scale factor must be positive");
  std::vector<Atom> atoms = atoms_;
  for (auto& a : atoms) a.mass *= factor;
  return MeasureRealization(std::move(atoms), diffuse_coeff_ * factor);
}

double evaluate(const MeasureRealization& r, const IntervalSet& s) {
  double total = 0.0;
  for (const auto& iv : s.intervals()) total += r.atom_mass(iv.lo, iv.hi);
  if (r.diffuse_coeff() > 0.0) total += r.diffuse_coeff() * lebesgue(s);
  return total;
}

double evaluate(const MeasureSample& sample, const IntervalSet& s) {
  if (sample.atomic && !is_subset(s, sample.window))
    throw DomainError("evaluate: set extends beyond the sampled window");
  return evaluate(sample.realization, s);
}

void write_realization_csv(std::ostream& out, const MeasureRealization& r) {
  out << "diffuse_coeff," << format_double(r.diffuse_coeff()) << '\n';
  out << "location,mass\n";
  for (const auto& a : r.atoms())
    out << format_double(a.location) << ',' << format_double(a.mass) << '\n';
}

double ExactPmf::marginal(std::size_t j, double v) const {
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i)
    if (j < support[i].size() && support[i][j] == v) total += probs[i];
  return total;
}

void to_json(json& j, const ModelSpec& spec) { j = json{{"name", spec.name}, {"params", spec.params}}; }

void from_json(const json& j, ModelSpec& spec) {
  if (!j.is_object() || !j.contains("name") || !j.at("name").is_string())
    throw ConfigError("model spec must be an object with a string \"name\"");
  spec.name = j.at("name").get<std::string>();
  spec.params = j.value("params", json::object());
  if (!spec.params.is_object()) throw ConfigError("model \"params\" must be an object");
}

SequenceModel::SequenceModel(ModelSpec spec, Sampler sampler, bool nonnegative)
    : spec_(std::move(spec)),
      sampler_(std::make_shared<const Sampler>(std::move(sampler))),
      nonnegative_(nonnegative) {}

SequenceSample SequenceModel::sample(std::size_t n, Stream& stream) const {
  if (n == 0) throw DomainError("sample_sequence: n must be >= 1");
  SequenceSample s = (*sampler_)(n, stream);
  if (s.values.size() != n) throw InvariantError(name() + ": sampler returned wrong length");
  if (!(s.weight > 0.0) || !std::isfinite(s.weight))
    throw InvariantError(name() + ": non-positive importance weight");
  return s;
}

std::optional<ExactPmf> SequenceModel::exact_pmf(std::size_t n) const {
  if (!pmf_) return std::nullopt;
  return pmf_(n);
}

std::optional<double> SequenceModel::norm_limit(const SequenceSample& s, double p) const {
  if (!norm_limit_) return std::nullopt;
  return norm_limit_(s, p);
}

SequenceModel SequenceModel::with_exact_pmf(PmfFunction pmf) const {
  SequenceModel copy = *this;
  copy.pmf_ = std::move(pmf);
  return copy;
}

SequenceModel SequenceModel::with_norm_limit(NormLimit limit) const {
  SequenceModel copy = *this;
  copy.norm_limit_ = std::move(limit);
  return copy;
}

SequenceModel SequenceModel::with_spec(ModelSpec spec) const {
  SequenceModel copy = *this;
  copy.spec_ = std::move(spec);
  return copy;
}

MeasureModel::MeasureModel(ModelSpec spec, Sampler sampler, bool atomic, IntervalSet required)
    : spec_(std::move(spec)),
      sampler_(std::make_shared<const Sampler>(std::move(sampler))),
      atomic_(atomic),
      required_window_(std::move(required)) {}

MeasureSample MeasureModel::sample(const IntervalSet& window, Stream& stream) const {
  if (!window.bounded()) throw DomainError("sample_measure: window must have finite measure");
  const IntervalSet full = set_union(window, required_window_);
  MeasureSample s = (*sampler_)(full, stream);
  s.atomic = atomic_;
  if (!(s.weight > 0.0) || !std::isfinite(s.weight))
    throw InvariantError(name() + ": non-positive importance weight");
  return s;
}

MeasureModel MeasureModel::with_spec(ModelSpec spec) const {
  MeasureModel copy = *this;
  copy.spec_ = std::move(spec);
  return copy;
}

SequenceSample sample_sequence(const SequenceModel& model, std::size_t n, Stream& stream) {
  return model.sample(n, stream);
}

MeasureSample sample_measure(const MeasureModel& model, const IntervalSet& window,
                             Stream& stream) {
  return model.sample(window, stream);
}

SequenceModel swap_from_base(const SequenceModel& base, SequenceScaling scaling, double c,
                             std::string name) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw DomainError("swap_from_base: c = E_Q[1/|X|] must be positive and finite");
  if (!scaling.x) throw DomainError("swap_from_base: missing X function");
  ModelSpec spec{name.empty() ? "swap(" + base.name() + ")" : std::move(name),
                 json{{"base", base.spec()}, {"X", scaling.description}, {"c", c}}};
  auto sampler = [base, scaling, c](std::size_t n, Stream& stream) {
    SequenceSample s = base.sample(std::max(n, scaling.min_prefix), stream);
    const double x = scaling.x(s);
    if (x == 0.0 || !std::isfinite(x))
      throw DomainError("swap_from_base: X = 0 (or non-finite) encountered; X must be nonzero");
    s.values.resize(n);
    for (double& v : s.values) v *= x;
    s.aux_x *= x;
    s.weight /= c * std::fabs(x);
    return s;
  };
  return SequenceModel(std::move(spec), std::move(sampler), false);
}

MeasureModel swap_measure_from_base(const MeasureModel& base, MeasureScaling scaling, double c,
                                    std::string name) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw DomainError("swap_measure_from_base: c = E_Q[1/X] must be positive and finite");
  if (!scaling.x) throw DomainError("swap_measure_from_base: missing X function");
  ModelSpec spec{name.empty() ? "swap(" + base.name() + ")" : std::move(name),
                 json{{"base", base.spec()}, {"X", scaling.description}, {"c", c}}};
  const IntervalSet required = set_union(base.required_window(), scaling.required_window);
  auto sampler = [base, scaling, c](const IntervalSet& window, Stream& stream) {
    MeasureSample s = base.sample(window, stream);
    const double x = scaling.x(s);
    if (!(x > 0.0) || !std::isfinite(x))
      throw DomainError("swap_measure_from_base: X must be positive, got " + format_double(x));
    s.realization = s.realization.scaled(x);
    s.aux_x *= x;
    s.weight /= c * x;
    return s;
  };
  return MeasureModel(std::move(spec), std::move(sampler), base.atomic(), required);
}

namespace {

InverseMoment mean_and_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

}  // namespace

InverseMoment estimate_inverse_moment(const SequenceModel& base, const SequenceScaling& scaling,
                                      std::size_t draws, const SimContext& ctx) {
  const SimContext pre = ctx.derive(lane_tag::kPrepass);
  auto terms = simulate(draws, pre, [&](std::size_t, Stream& stream) {
    const SequenceSample s = base.sample(std::max<std::size_t>(1, scaling.min_prefix), stream);
    const double x = scaling.x(s);
    if (x == 0.0) throw DomainError("estimate_inverse_moment: X = 0 encountered");
    return s.weight / std::fabs(x);
  });
  return mean_and_se(terms);
}

InverseMoment estimate_inverse_moment(const MeasureModel& base, const MeasureScaling& scaling,
                                      std::size_t draws, const SimContext& ctx) {
  const SimContext pre = ctx.derive(lane_tag::kPrepass);
  const IntervalSet window = scaling.required_window;
  auto terms = simulate(draws, pre, [&](std::size_t, Stream& stream) {
    const MeasureSample s = base.sample(window, stream);
    const double x = scaling.x(s);
    if (!(x > 0.0)) throw DomainError("estimate_inverse_moment: X must be positive");
    return s.weight / x;
  });
  return mean_and_se(terms);
}

// ---------------------------------------------------------------------------
// Built-in catalog

namespace {

void check_known_params(const json& params, std::initializer_list<const char*> known,
                        const std::string& model) {
  for (auto it = params.begin(); it != params.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
      throw DomainError(model + ": unknown parameter \"" + it.key() + "\"");
  }
}

double number_param(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw DomainError(std::string("parameter \"") + key + "\" must be a number");
  return v.get<double>();
}

std::vector<double> vector_param(const json& params, const char* key,
                                 std::vector<double> fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_array()) throw DomainError(std::string("parameter \"") + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number())
      throw DomainError(std::string("parameter \"") + key + "\" must contain numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

/// c parameter: a positive number, or "estimate".
std::optional<double> c_param(const json& params, double analytic) {
  if (!params.contains("c")) return analytic;
  const auto& v = params.at("c");
  if (v.is_string() && v.get<std::string>() == "estimate") return std::nullopt;
  if (v.is_number()) return v.get<double>();
  throw DomainError("parameter \"c\" must be a number or \"estimate\"");
}

struct DiscreteDist {
  std::vector<double> values;
  std::vector<double> probs;
};

DiscreteDist discrete_param(const json& params, std::vector<double> default_values,
                            std::vector<double> default_probs) {
  DiscreteDist d{vector_param(params, "values", std::move(default_values)), {}};
  if (d.values.empty()) throw DomainError("discrete distribution needs at least one value");
  d.probs = vector_param(params, "probs",
                         params.contains("values") && !params.contains("probs")
                             ? std::vector<double>(d.values.size(), 1.0 / d.values.size())
                             : std::move(default_probs));
  if (d.probs.size() != d.values.size())
    throw DomainError("\"values\" and \"probs\" must have equal length");
  double total = 0.0;
  for (double p : d.probs) {
    if (!(p >= 0.0)) throw DomainError("probabilities must be >= 0");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw DomainError("probabilities must sum to 1");
  return d;
}

std::optional<ExactPmf> product_pmf(const DiscreteDist& d, std::size_t n) {
  double size = std::pow(static_cast<double>(d.values.size()), static_cast<double>(n));
  if (size > 200000.0) return std::nullopt;
  ExactPmf pmf;
  pmf.support.push_back({});
  pmf.probs.push_back(1.0);
  for (std::size_t j = 0; j < n; ++j) {
    ExactPmf next;
    for (std::size_t i = 0; i < pmf.support.size(); ++i) {
      for (std::size_t k = 0; k < d.values.size(); ++k) {
        if (d.probs[k] == 0.0) continue;
        auto point = pmf.support[i];
        point.push_back(d.values[k]);
        next.support.push_back(std::move(point));
        next.probs.push_back(pmf.probs[i] * d.probs[k]);
      }
    }
    pmf = std::move(next);
  }
  return pmf;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// E|N(mean, sd^2)|
double folded_normal_mean(double mean, double sd) {
  return sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mean * mean / (2.0 * sd * sd)) +
         mean * (1.0 - 2.0 * normal_cdf(-mean / sd));
}

SequenceModel make_iid(const ModelSpec& in) {
  const json& p = in.params;
  check_known_params(p, {"dist", "mean", "sd", "p", "a", "b", "values", "probs", "value", "scales"},
                     "iid");
  const std::string dist = p.value("dist", std::string("normal"));
  const std::vector<double> scales = vector_param(p, "scales", {});
  json resolved = {{"dist", dist}};
  if (!scales.empty()) resolved["scales"] = scales;

  std::function<double(Stream&)> draw;
  std::optional<DiscreteDist> discrete;
  bool nonneg = false;
  if (dist == "normal") {
    const double mean = number_param(p, "mean", 0.0);
    const double sd = number_param(p, "sd", 1.0);
    if (!(sd > 0.0)) throw DomainError("iid: sd must be positive");
    resolved["mean"] = mean;
    resolved["sd"] = sd;
    draw = [mean, sd](Stream& s) { return mean + sd * s.normal(); };
  } else if (dist == "bernoulli") {
    const double prob = number_param(p, "p", 0.5);
    const double a = number_param(p, "a", 0.0);
    const double b = number_param(p, "b", 1.0);
    if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("iid: p must lie in [0, 1]");
    resolved["p"] = prob;
    resolved["a"] = a;
    resolved["b"] = b;
    discrete = DiscreteDist{{a, b}, {1.0 - prob, prob}};
  } else if (dist == "discrete") {
    discrete = discrete_param(p, {}, {});
    resolved["values"] = discrete->values;
    resolved["probs"] = discrete->probs;
  } else if (dist == "constant") {
    const double v = number_param(p, "value", 1.0);
    resolved["value"] = v;
    discrete = DiscreteDist{{v}, {1.0}};
  } else {
    throw DomainError("iid: unknown dist \"" + dist + "\" (normal|bernoulli|discrete|constant)");
  }
  if (discrete) {
    nonneg = std::all_of(discrete->values.begin(), discrete->values.end(),
                         [](double v) { return v >= 0.0; });
    auto d = *discrete;
    draw = [d](Stream& s) { return d.values[s.discrete(d.probs)]; };
  }
  if (!scales.empty())
    nonneg = nonneg && std::all_of(scales.begin(), scales.end(), [](double v) { return v >= 0; });

  auto sampler = [draw, scales](std::size_t n, Stream& stream) {
    SequenceSample s;
    s.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      s.values[j] = draw(stream);
      if (j < scales.size()) s.values[j] *= scales[j];
    }
    return s;
  };
  SequenceModel model(ModelSpec{"iid", resolved}, sampler, nonneg);
  if (discrete && scales.empty()) {
    auto d = *discrete;
    model = model.with_exact_pmf([d](std::size_t n) { return product_pmf(d, n); });
  }
  return model;
}

SequenceModel make_iid_divide(const ModelSpec& in, const SimContext& ctx) {
  const json& p = in.params;
  check_known_params(p, {"dist", "values", "probs", "mean", "sd", "c"}, "iid_divide");
  const std::string dist = p.value("dist", std::string("discrete"));
  json base_params;
  double analytic_c = 0.0;
  if (dist == "discrete") {
    const DiscreteDist d = discrete_param(p, {1.0, 2.0}, {0.5, 0.5});
    for (std::size_t k = 0; k < d.values.size(); ++k) {
      if (d.values[k] == 0.0 && d.probs[k] > 0.0)
        throw DomainError("iid_divide: base values must be nonzero (X = 1/eta_1)");
      analytic_c += d.probs[k] * std::fabs(d.values[k]);
    }
    base_params = {{"dist", "discrete"}, {"values", d.values}, {"probs", d.probs}};
  } else if (dist == "normal") {
    const double mean = number_param(p, "mean", 0.0);
    const double sd = number_param(p, "sd", 1.0);
    if (!(sd > 0.0)) throw DomainError("iid_divide: sd must be positive");
    analytic_c = folded_normal_mean(mean, sd);
    base_params = {{"dist", "normal"}, {"mean", mean}, {"sd", sd}};
  } else {
    throw DomainError("iid_divide: dist must be \"discrete\" or \"normal\"");
  }
  const SequenceModel base = make_iid(ModelSpec{"iid", base_params});
  SequenceScaling scaling{"1/eta_1", [](const SequenceSample& s) { return 1.0 / s.values[0]; }, 1};
  double c = analytic_c;
  json resolved = base_params;
  if (auto given = c_param(p, analytic_c)) {
    c = *given;
  } else {
    const InverseMoment est = estimate_inverse_moment(base, scaling, kDefaultPrepassDraws, ctx);
    c = est.value;
    resolved["c_estimate_se"] = est.se;
  }
  resolved["c"] = c;
  return swap_from_base(base, scaling, c, "iid_divide").with_spec({"iid_divide", resolved});
}

// The division example with eta_1 uniform on {1, 2}.
SequenceModel make_three_value(const ModelSpec& in, const SimContext& ctx) {
  check_known_params(in.params, {}, "three_value");
  SequenceModel m = make_iid_divide(
      ModelSpec{"iid_divide", {{"values", {1.0, 2.0}}, {"probs", {0.5, 0.5}}}}, ctx);
  auto pmf = [](std::size_t n) -> std::optional<ExactPmf> {
    if (n > 12) return std::nullopt;
    // P(xi_1 = 1, xi_2..n = m) = 2^{1-n}/3 (1{m in {1,2}^{n-1}} + 2 * 1{m in {1/2,1}^{n-1}})
    ExactPmf out;
    const double scale = std::ldexp(1.0, 1 - static_cast<int>(n)) / 3.0;
    const double levels[3] = {0.5, 1.0, 2.0};
    std::size_t count = 1;
    for (std::size_t j = 1; j < n; ++j) count *= 3;
    for (std::size_t code = 0; code < count; ++code) {
      std::vector<double> point{1.0};
      bool in_high = true, in_low = true;
      std::size_t c = code;
      for (std::size_t j = 1; j < n; ++j) {
        const double v = levels[c % 3];
        c /= 3;
        point.push_back(v);
        in_high = in_high && (v == 1.0 || v == 2.0);
        in_low = in_low && (v == 0.5 || v == 1.0);
      }
      const double prob = scale * ((in_high ? 1.0 : 0.0) + (in_low ? 2.0 : 0.0));
      if (prob > 0.0) {
        out.support.push_back(std::move(point));
        out.probs.push_back(prob);
      }
    }
    return out;
  };
  return SequenceModel(m).with_exact_pmf(pmf).with_spec({"three_value", json::object()});
}

// rho i.i.d. uniform on {-1, 0, 1}, X = 1 + |rho_1|, dP/dR = (3/2) / X.
SequenceModel make_sym_three_value(const ModelSpec& in) {
  check_known_params(in.params, {}, "sym_three_value");
  const SequenceModel base = make_iid(
      ModelSpec{"iid", {{"dist", "discrete"}, {"values", {-1.0, 0.0, 1.0}},
                        {"probs", {1.0 / 3, 1.0 / 3, 1.0 / 3}}}});
  SequenceScaling scaling{"1 + |rho_1|",
                          [](const SequenceSample& s) { return 1.0 + std::fabs(s.values[0]); }, 1};
  // c = E_R[1/X] = 1/3 + (2/3)(1/2) = 2/3
  SequenceModel m = swap_from_base(base, scaling, 2.0 / 3.0, "sym_three_value");
  auto pmf = [](std::size_t n) -> std::optional<ExactPmf> {
    if (n > 10) return std::nullopt;
    ExactPmf out;
    const double unit = std::pow(3.0, 1.0 - static_cast<double>(n));
    std::size_t count = 1;
    for (std::size_t j = 1; j < n; ++j) count *= 3;
    auto emit = [&](double first, double step, double prob) {
      for (std::size_t code = 0; code < count; ++code) {
        std::vector<double> point{first};
        std::size_t c = code;
        for (std::size_t j = 1; j < n; ++j) {
          point.push_back(step * (static_cast<double>(c % 3) - 1.0));
          c /= 3;
        }
        out.support.push_back(std::move(point));
        out.probs.push_back(prob);
      }
    };
    emit(0.0, 1.0, unit * 0.5);
    emit(-2.0, 2.0, unit * 0.25);
    emit(2.0, 2.0, unit * 0.25);
    return out;
  };
  // ||xi||_p = X (E|rho|^p)^{1/p} = X (2/3)^{1/p}; p = inf gives X.
  auto norm = [](const SequenceSample& s, double p) -> std::optional<double> {
    if (std::isinf(p)) return s.aux_x;
    return s.aux_x * std::pow(2.0 / 3.0, 1.0 / p);
  };
  return m.with_exact_pmf(pmf).with_norm_limit(norm).with_spec(
      {"sym_three_value", json::object()});
}

SequenceModel make_lognormal(const ModelSpec& in) {
  const json& p = in.params;
  check_known_params(p, {"b"}, "lognormal");
  const std::vector<double> b = vector_param(p, "b", {0.3, 0.1});
  double beta = 0.0;
  for (double v : b) {
    if (!std::isfinite(v)) throw DomainError("lognormal: b must be finite");
    beta += v * v;
  }
  auto sampler = [b, beta](std::size_t n, Stream& stream) {
    const std::size_t len = std::max(n, b.size());
    std::vector<double> z(len);
    for (double& v : z) v = stream.normal();
    double shared = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) shared += b[k] * z[k];
    SequenceSample s;
    s.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double bj = j < b.size() ? b[j] : 0.0;
      const double shift = -0.5 * (1.0 + beta + 2.0 * bj);
      s.values[j] = std::exp(z[j] + shared + shift);
    }
    s.aux_x = std::exp(shared - 0.5 * beta);
    return s;
  };
  // Nonnegative sequence: the p = 1 norm limit is the ergodic limit X.
  auto norm = [](const SequenceSample& s, double p) -> std::optional<double> {
    if (p == 1.0) return s.aux_x;
    return std::nullopt;
  };
  return SequenceModel(ModelSpec{"lognormal", {{"b", b}}}, sampler, true).with_norm_limit(norm);
}

MeasureModel make_poisson(const ModelSpec& in) {
  const json& p = in.params;
  check_known_params(p, {"rate"}, "poisson");
  const double rate = number_param(p, "rate", 1.0);
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("poisson: rate must be positive");
  auto sampler = [rate](const IntervalSet& window, Stream& stream) {
    std::vector<Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(lebesgue(window) * rate * 1.1) + 8);
    for (const auto& iv : window.intervals()) {
      double t = iv.lo + stream.exponential() / rate;
      while (t < iv.hi) {
        if (atoms.empty() || t > atoms.back().location) {
          atoms.push_back({t, 1.0});
        } else {
          atoms.back().mass += 1.0;  // coincident in floating point
        }
        t += stream.exponential() / rate;
      }
    }
    MeasureSample s;
    s.realization = MeasureRealization(std::move(atoms), 0.0);
    s.window = window;
    s.aux_x = rate;
    return s;
  };
  return MeasureModel(ModelSpec{"poisson", {{"rate", rate}}}, sampler, true);
}

IntervalSet set_param(const json& params, const char* key, IntervalSet fallback) {
  if (!params.contains(key)) return fallback;
  return params.at(key).get<IntervalSet>();
}

MeasureModel make_poisson_scaled(const ModelSpec& in, const SimContext& ctx) {
  const json& p = in.params;
  check_known_params(p, {"K", "L", "c"}, "poisson_scaled");
  const IntervalSet k = set_param(p, "K", IntervalSet::single(0.0, 1.0));
  const IntervalSet l = set_param(p, "L", IntervalSet::single(1.0, 2.0));
  if (lebesgue(k) != 1.0 || lebesgue(l) != 1.0)
    throw DomainError("poisson_scaled: K and L must each have Lebesgue measure 1");
  if (!disjoint(k, l)) throw DomainError("poisson_scaled: K and L must be disjoint");
  const MeasureModel base = make_poisson(ModelSpec{"poisson", json::object()});
  MeasureScaling scaling{"1 + 1{eta(K) > 0}",
                         [k](const MeasureSample& s) {
                           return evaluate(s.realization, k) > 0.0 ? 2.0 : 1.0;
                         },
                         k};
  const double analytic = 0.5 * (1.0 + std::exp(-1.0));
  json resolved = {{"K", k}, {"L", l}};
  double c = analytic;
  if (auto given = c_param(p, analytic)) {
    c = *given;
  } else {
    const InverseMoment est = estimate_inverse_moment(base, scaling, kDefaultPrepassDraws, ctx);
    c = est.value;
    resolved["c_estimate_se"] = est.se;
  }
  resolved["c"] = c;
  return swap_measure_from_base(base, scaling, c).with_spec({"poisson_scaled", resolved});
}

MeasureModel make_diffuse_alpha(const ModelSpec& in) {
  const json& p = in.params;
  check_known_params(p, {"alpha"}, "diffuse_alpha");
  DiscreteDist d{{2.0}, {1.0}};
  if (p.contains("alpha")) {
    const json& a = p.at("alpha");
    if (a.is_number()) {
      d = DiscreteDist{{a.get<double>()}, {1.0}};
    } else if (a.is_object()) {
      d = discrete_param(a, {}, {});
    } else {
      throw DomainError("diffuse_alpha: alpha must be a number or {values, probs}");
    }
  }
  for (double v : d.values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("diffuse_alpha: alpha must be >= 0");
  auto sampler = [d](const IntervalSet& window, Stream& stream) {
    const double alpha = d.values.size() == 1 ? d.values[0] : d.values[stream.discrete(d.probs)];
    MeasureSample s;
    s.realization = MeasureRealization({}, alpha);
    s.window = window;
    s.aux_x = alpha;
    return s;
  };
  return MeasureModel(ModelSpec{"diffuse_alpha",
                                {{"alpha", {{"values", d.values}, {"probs", d.probs}}}}},
                      sampler, false);
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = [] {
    std::vector<CatalogEntry> e = {
        {"diffuse_alpha", "measure", "Theorem (theo-diffuse-rm)",
         "xi = alpha * Lebesgue with random alpha >= 0",
         {{"alpha", "number or {values, probs} (default 2)"}}},
        {"iid", "sequence", "i.i.d. reference",
         "i.i.d. coordinates; optional per-coordinate scales break exchangeability",
         {{"dist", "normal|bernoulli|discrete|constant (default normal)"},
          {"mean", "normal mean (0)"}, {"sd", "normal sd (1)"},
          {"p", "bernoulli success probability (0.5)"}, {"a", "bernoulli low value (0)"},
          {"b", "bernoulli high value (1)"}, {"values", "discrete support"},
          {"probs", "discrete probabilities"}, {"value", "constant value (1)"},
          {"scales", "per-coordinate multipliers (none)"}}},
        {"iid_divide", "sequence", "Example (ex-swap-from-exch)",
         "xi_j = eta_j / eta_1 for i.i.d. eta, dP/dQ = |eta_1| / E|eta_1|",
         {{"dist", "discrete|normal (default discrete)"},
          {"values", "discrete support ([1, 2])"}, {"probs", "discrete probabilities"},
          {"mean", "normal mean"}, {"sd", "normal sd"},
          {"c", "number or \"estimate\" (analytic E|eta_1|)"}}},
        {"lognormal", "sequence", "Example (ex-swap-lognormal)",
         "xi_j = exp(Z_j + sum_k b_k Z_k + mu_j), X = exp(sum_k b_k Z_k - beta/2)",
         {{"b", "finitely many coefficients ([0.3, 0.1])"}}},
        {"poisson", "measure", "Example (ex-poisson)",
         "Poisson process with intensity rate * Lebesgue", {{"rate", "intensity (1)"}}},
        {"poisson_scaled", "measure", "Example (ex-swap-rm)",
         "xi = X eta, X = 1 + 1{eta(K) > 0}, dP/dQ = 1/(cX), c = (1 + 1/e)/2",
         {{"K", "interval set of measure 1 ([[0, 1]])"},
          {"L", "interval set of measure 1 ([[1, 2]])"},
          {"c", "number or \"estimate\" (analytic (1 + 1/e)/2)"}}},
        {"sym_three_value", "sequence", "Example (ex-swap-norm)",
         "xi_j = X rho_j, rho i.i.d. on {-1, 0, 1}, X = 1 + |rho_1|, dP/dR = (3/2)/X", json::object()},
        {"three_value", "sequence", "Example (ex-swap-from-exch-special)",
         "iid_divide with eta_1 uniform on {1, 2}; values in {1/2, 1, 2}", json::object()},
    };
    std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return e;
  }();
  return entries;
}

Model builtin(const ModelSpec& spec, const SimContext& ctx) {
  const std::string& n = spec.name;
  if (n == "iid") return make_iid(spec);
  if (n == "iid_divide") return make_iid_divide(spec, ctx);
  if (n == "three_value") return make_three_value(spec, ctx);
  if (n == "sym_three_value") return make_sym_three_value(spec);
  if (n == "lognormal") return make_lognormal(spec);
  if (n == "poisson") return make_poisson(spec);
  if (n == "poisson_scaled") return make_poisson_scaled(spec, ctx);
  if (n == "diffuse_alpha") return make_diffuse_alpha(spec);
  throw ConfigError("unknown model \"" + n + "\"; see list-models");
}

SequenceModel builtin_sequence(const ModelSpec& spec, const SimContext& ctx) {
  Model m = builtin(spec, ctx);
  if (auto* s = std::get_if<SequenceModel>(&m)) return *s;
  throw ConfigError("model \"" + spec.name + "\" is a random measure, not a sequence");
}

MeasureModel builtin_measure(const ModelSpec& spec, const SimContext& ctx) {
  Model m = builtin(spec, ctx);
  if (auto* s = std::get_if<MeasureModel>(&m)) return *s;
  throw ConfigError("model \"" + spec.name + "\" is a sequence, not a random measure");
}

}  // namespace swapzon
