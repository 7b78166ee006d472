#include "swapzon/swapzon.h"

#include <cstring>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/harness.hpp"
#include "core/interval_set.hpp"
#include "core/models.hpp"
#include "core/zonoid_stats.hpp"

struct swz_interval_set {
  swapzon::IntervalSet set;
};

struct swz_model {
  swapzon::Model model;
};

namespace {

thread_local std::string g_last_error;

swz_status fail(swz_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

swz_status from_exception() {
  try {
    throw;
  } catch (const swapzon::DomainError& e) {
    return fail(SWZ_ERR_ARGUMENT, e.what());
  } catch (const swapzon::ConfigError& e) {
    return fail(SWZ_ERR_CONFIG, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SWZ_ERR_CONFIG, e.what());
  } catch (const swapzon::IoError& e) {
    return fail(SWZ_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(SWZ_ERR_INVARIANT, e.what());
  } catch (...) {
    return fail(SWZ_ERR_INVARIANT, "unknown error");
  }
}

template <class Fn>
swz_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (...) {
    return from_exception();
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

swapzon::ModelSpec parse_spec(const char* text) {
  const auto j = nlohmann::json::parse(text);
  if (j.is_string()) return {j.get<std::string>(), nlohmann::json::object()};
  return j.get<swapzon::ModelSpec>();
}

swapzon::Stream make_stream(uint64_t seed, uint64_t replicate) {
  return swapzon::Stream({seed, 0, replicate});
}

std::vector<std::string> split_names(const char* s) {
  std::vector<std::string> out;
  if (!s) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

swz_status run_result(const swapzon::RunResult& r, char** manifest) {
  if (manifest) *manifest = copy_string(r.manifest.dump(2));
  return r.all_pass ? SWZ_OK : SWZ_REJECT;
}

swapzon::RunOptions run_options(const char* out_dir, unsigned threads) {
  swapzon::RunOptions o;
  if (out_dir) o.out_dir = out_dir;
  if (threads > 0) o.threads = threads;
  return o;
}

}  // namespace

extern "C" {

const char* swz_last_error(void) { return g_last_error.c_str(); }

const char* swz_version(void) { return swapzon::kVersion; }

void swz_string_free(char* s) { delete[] s; }

swz_status swz_interval_set_create(const double* lo, const double* hi, size_t count,
                                   swz_interval_set** out) {
  if (!out || (count && (!lo || !hi))) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<swapzon::Interval> raw;
    for (size_t i = 0; i < count; ++i) raw.push_back({lo[i], hi[i]});
    *out = new swz_interval_set{swapzon::IntervalSet::normalize(std::move(raw))};
    return SWZ_OK;
  });
}

swz_status swz_interval_set_from_json(const char* json, swz_interval_set** out) {
  if (!json || !out) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new swz_interval_set{nlohmann::json::parse(json).get<swapzon::IntervalSet>()};
    return SWZ_OK;
  });
}

void swz_interval_set_free(swz_interval_set* set) { delete set; }

size_t swz_interval_set_size(const swz_interval_set* set) { return set ? set->set.size() : 0; }

swz_status swz_interval_set_get(const swz_interval_set* set, size_t index, double* lo, double* hi) {
  if (!set || !lo || !hi) return fail(SWZ_ERR_ARGUMENT, "null argument");
  if (index >= set->set.size()) return fail(SWZ_ERR_ARGUMENT, "interval index out of range");
  *lo = set->set.intervals()[index].lo;
  *hi = set->set.intervals()[index].hi;
  return SWZ_OK;
}

double swz_interval_set_lebesgue(const swz_interval_set* set) {
  return set ? swapzon::lebesgue(set->set) : 0.0;
}

swz_status swz_interval_set_combine(const swz_interval_set* a, const swz_interval_set* b,
                                    swz_set_op op, swz_interval_set** out) {
  if (!a || !b || !out) return fail(SWZ_ERR_ARGUMENT, "null argument");
  swapzon::SetOp o;
  switch (op) {
    case SWZ_UNION: o = swapzon::SetOp::Union; break;
    case SWZ_INTERSECT: o = swapzon::SetOp::Intersect; break;
    case SWZ_DIFFERENCE: o = swapzon::SetOp::Difference; break;
    default: return fail(SWZ_ERR_ARGUMENT, "unknown set operation");
  }
  return guarded([&] {
    *out = new swz_interval_set{swapzon::combine(a->set, b->set, o)};
    return SWZ_OK;
  });
}

swz_status swz_interval_set_prefix(const swz_interval_set* region, double t, swz_interval_set** out) {
  if (!region || !out) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new swz_interval_set{swapzon::prefix(region->set, t)};
    return SWZ_OK;
  });
}

swz_status swz_interval_set_to_json(const swz_interval_set* set, char** out) {
  if (!set || !out) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = copy_string(nlohmann::json(set->set).dump());
    return SWZ_OK;
  });
}

swz_status swz_model_create(const char* spec_json, uint64_t master_seed, swz_model** out) {
  if (!spec_json || !out) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const swapzon::SimContext ctx{master_seed, 0, 1};
    *out = new swz_model{swapzon::builtin(parse_spec(spec_json), ctx.derive(swapzon::lane_tag::kPrepass))};
    return SWZ_OK;
  });
}

void swz_model_free(swz_model* model) { delete model; }

int swz_model_is_measure(const swz_model* model) {
  return model && std::holds_alternative<swapzon::MeasureModel>(model->model) ? 1 : 0;
}

swz_status swz_model_to_json(const swz_model* model, char** out) {
  if (!model || !out) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& spec = std::visit([](const auto& m) -> const swapzon::ModelSpec& { return m.spec(); },
                                  model->model);
    *out = copy_string(nlohmann::json(spec).dump());
    return SWZ_OK;
  });
}

swz_status swz_list_models(char** out) {
  if (!out) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = copy_string(swapzon::list_models_text());
    return SWZ_OK;
  });
}

swz_status swz_sample_sequence(const swz_model* model, size_t n, uint64_t master_seed,
                               uint64_t replicate, double* values, double* aux_x, double* weight) {
  if (!model || !values) return fail(SWZ_ERR_ARGUMENT, "null argument");
  if (!std::holds_alternative<swapzon::SequenceModel>(model->model)) {
    return fail(SWZ_ERR_ARGUMENT, "model is not a sequence model");
  }
  return guarded([&] {
    swapzon::Stream rng = make_stream(master_seed, replicate);
    const auto s = std::get<swapzon::SequenceModel>(model->model).sample(n, rng);
    std::copy(s.values.begin(), s.values.end(), values);
    if (aux_x) *aux_x = s.aux_x;
    if (weight) *weight = s.weight;
    return SWZ_OK;
  });
}

swz_status swz_sample_measure_csv(const swz_model* model, const swz_interval_set* window,
                                  uint64_t master_seed, uint64_t replicate, char** csv,
                                  double* aux_x, double* weight) {
  if (!model || !window || !csv) return fail(SWZ_ERR_ARGUMENT, "null argument");
  if (!std::holds_alternative<swapzon::MeasureModel>(model->model)) {
    return fail(SWZ_ERR_ARGUMENT, "model is not a measure model");
  }
  return guarded([&] {
    swapzon::Stream rng = make_stream(master_seed, replicate);
    const auto s = std::get<swapzon::MeasureModel>(model->model).sample(window->set, rng);
    std::ostringstream out;
    swapzon::write_realization_csv(out, s.realization);
    *csv = copy_string(out.str());
    if (aux_x) *aux_x = s.aux_x;
    if (weight) *weight = s.weight;
    return SWZ_OK;
  });
}

swz_status swz_zonoid_functional(const swz_model* model, const double* u, size_t dim,
                                 const swz_interval_set* const* sets, size_t draws,
                                 uint64_t master_seed, unsigned threads, swz_estimate* out) {
  if (!model || !u || !out || dim == 0) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const swapzon::SimContext ctx{master_seed, 0, threads ? threads : 1};
    const std::vector<double> dir(u, u + dim);
    swapzon::Estimate e;
    if (const auto* m = std::get_if<swapzon::MeasureModel>(&model->model)) {
      if (!sets) throw swapzon::DomainError("measure models need one set per direction entry");
      std::vector<swapzon::IntervalSet> s;
      for (size_t j = 0; j < dim; ++j) {
        if (!sets[j]) throw swapzon::DomainError("null set");
        s.push_back(sets[j]->set);
      }
      e = swapzon::zonoid_functional_sets(*m, s, dir, draws, ctx);
    } else {
      e = swapzon::zonoid_functional(std::get<swapzon::SequenceModel>(model->model), dir, draws, ctx);
    }
    *out = {e.value, e.se, e.n_samples, e.ess};
    return SWZ_OK;
  });
}

swz_status swz_run_config_json(const char* config_json, const char* out_dir, unsigned threads,
                               char** manifest) {
  if (!config_json) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    nlohmann::json config;
    try {
      config = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw swapzon::ConfigError(std::string("malformed JSON config: ") + e.what());
    }
    return run_result(swapzon::run_config(config, run_options(out_dir, threads)), manifest);
  });
}

swz_status swz_run_config_file(const char* path, const char* out_dir, unsigned threads,
                               char** manifest) {
  if (!path) return fail(SWZ_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    return run_result(swapzon::run_config_file(path, run_options(out_dir, threads)), manifest);
  });
}

void swz_suite_options_init(swz_suite_options* options) {
  if (!options) return;
  *options = {nullptr, swapzon::kDefaultMasterSeed, 0, 1, nullptr};
}

swz_status swz_paper_suite(const swz_suite_options* options, swz_line_callback on_line, void* user) {
  swz_suite_options defaults;
  swz_suite_options_init(&defaults);
  const swz_suite_options& o = options ? *options : defaults;
  return guarded([&] {
    swapzon::SuiteOptions s;
    s.only = split_names(o.only);
    s.seed = o.seed;
    if (o.samples) s.samples = o.samples;
    s.threads = o.threads ? o.threads : 1;
    if (o.out_dir) s.out_dir = o.out_dir;
    if (on_line) s.on_line = [&](const std::string& line) { on_line(line.c_str(), user); };
    return swapzon::paper_suite(s).all_pass ? SWZ_OK : SWZ_REJECT;
  });
}

}  // extern "C"
