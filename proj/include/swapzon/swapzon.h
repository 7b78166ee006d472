#ifndef SWAPZON_SWAPZON_H
#define SWAPZON_SWAPZON_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SWZ_API __declspec(dllexport)
#elif defined(__GNUC__)
#define SWZ_API __attribute__((visibility("default")))
#else
#define SWZ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The first four match the CLI exit statuses. */
typedef enum swz_status {
  SWZ_OK = 0,
  SWZ_REJECT = 1,         /* a statistical test rejected */
  SWZ_ERR_CONFIG = 2,     /* malformed config, unknown model or experiment */
  SWZ_ERR_INVARIANT = 3,  /* internal invariant violated */
  SWZ_ERR_ARGUMENT = 4,   /* invalid argument or precondition */
  SWZ_ERR_IO = 5
} swz_status;

typedef struct swz_interval_set swz_interval_set;
typedef struct swz_model swz_model;

typedef enum swz_set_op { SWZ_UNION = 0, SWZ_INTERSECT = 1, SWZ_DIFFERENCE = 2 } swz_set_op;

/* Message of the last failed call on this thread; never NULL. */
SWZ_API const char* swz_last_error(void);
SWZ_API const char* swz_version(void);
/* Frees strings returned through char** out-parameters. */
SWZ_API void swz_string_free(char* s);

/* Interval sets on [0, inf). hi may be INFINITY. */
SWZ_API swz_status swz_interval_set_create(const double* lo, const double* hi, size_t count,
                                           swz_interval_set** out);
/* JSON form: [[lo, hi], ...] with "inf" for an unbounded end. */
SWZ_API swz_status swz_interval_set_from_json(const char* json, swz_interval_set** out);
SWZ_API void swz_interval_set_free(swz_interval_set* set);
SWZ_API size_t swz_interval_set_size(const swz_interval_set* set);
SWZ_API swz_status swz_interval_set_get(const swz_interval_set* set, size_t index, double* lo,
                                        double* hi);
SWZ_API double swz_interval_set_lebesgue(const swz_interval_set* set);
SWZ_API swz_status swz_interval_set_combine(const swz_interval_set* a, const swz_interval_set* b,
                                            swz_set_op op, swz_interval_set** out);
/* Leftmost subset of `region` with measure t. */
SWZ_API swz_status swz_interval_set_prefix(const swz_interval_set* region, double t,
                                           swz_interval_set** out);
SWZ_API swz_status swz_interval_set_to_json(const swz_interval_set* set, char** out);

/* Models from {"name": ..., "params": {...}} or a bare name string in JSON. */
SWZ_API swz_status swz_model_create(const char* spec_json, uint64_t master_seed, swz_model** out);
SWZ_API void swz_model_free(swz_model* model);
SWZ_API int swz_model_is_measure(const swz_model* model);
SWZ_API swz_status swz_model_to_json(const swz_model* model, char** out);
/* Catalog listing as printed by `swapzon list-models`. */
SWZ_API swz_status swz_list_models(char** out);

/* One sequence prefix: values[n], plus aux_x and weight. */
SWZ_API swz_status swz_sample_sequence(const swz_model* model, size_t n, uint64_t master_seed,
                                       uint64_t replicate, double* values, double* aux_x,
                                       double* weight);
/* One measure realization on `window` as CSV (diffuse_coeff line, then location,mass). */
SWZ_API swz_status swz_sample_measure_csv(const swz_model* model, const swz_interval_set* window,
                                          uint64_t master_seed, uint64_t replicate, char** csv,
                                          double* aux_x, double* weight);

typedef struct swz_estimate {
  double value;
  double se;
  size_t n_samples;
  double ess;
} swz_estimate;

/* E|<u, xi>| for a sequence model (sets == NULL) or E|sum u_j xi(A_j)| for a
   measure model (sets has dim entries). */
SWZ_API swz_status swz_zonoid_functional(const swz_model* model, const double* u, size_t dim,
                                         const swz_interval_set* const* sets, size_t draws,
                                         uint64_t master_seed, unsigned threads, swz_estimate* out);

/* Runs a config (JSON text or file) and writes results. SWZ_REJECT when any
   verdict rejects. `manifest` (optional) receives the manifest JSON. */
SWZ_API swz_status swz_run_config_json(const char* config_json, const char* out_dir,
                                       unsigned threads, char** manifest);
SWZ_API swz_status swz_run_config_file(const char* path, const char* out_dir, unsigned threads,
                                       char** manifest);

typedef void (*swz_line_callback)(const char* line, void* user);

typedef struct swz_suite_options {
  const char* only;     /* comma-separated criterion names, or NULL for all */
  uint64_t seed;
  size_t samples;       /* 0 keeps the default */
  unsigned threads;
  const char* out_dir;  /* NULL writes nothing */
} swz_suite_options;

SWZ_API void swz_suite_options_init(swz_suite_options* options);
SWZ_API swz_status swz_paper_suite(const swz_suite_options* options, swz_line_callback on_line,
                                   void* user);

#ifdef __cplusplus
}
#endif

#endif
