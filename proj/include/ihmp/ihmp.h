/* C interface to the ihmp library. All handles are opaque; every function
 * that can fail returns an ihmp_status and leaves a message retrievable with
 * ihmp_last_error() on the calling thread. Strings returned through char**
 * are owned by the caller and released with ihmp_string_free(). */
#ifndef IHMP_IHMP_H
#define IHMP_IHMP_H

#include <stddef.h>
#include <stdint.h>

#if defined(IHMP_BUILDING_LIBRARY)
#define IHMP_API __attribute__((visibility("default")))
#else
#define IHMP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ihmp_status {
  IHMP_OK = 0,
  IHMP_ERR_INVALID_ARGUMENT = 1,
  IHMP_ERR_NUMERICAL = 2,
  IHMP_ERR_RESOURCE_CAP = 3,
  IHMP_ERR_IO = 4,
  IHMP_ERR_PARSE = 5,
  IHMP_ERR_INTERNAL = 6
} ihmp_status;

typedef struct ihmp_scenario ihmp_scenario;
typedef struct ihmp_dataset ihmp_dataset;
typedef struct ihmp_options ihmp_options;
typedef struct ihmp_result ihmp_result;

IHMP_API const char* ihmp_version(void);
IHMP_API const char* ihmp_last_error(void);
IHMP_API const char* ihmp_status_name(ihmp_status status);
IHMP_API void ihmp_string_free(char* s);

/* ---- scenarios ----------------------------------------------------------
 * Keys: kind, T, sd, missing_ratio, seed, error_scenario, alpha, jitter_var,
 * qn, stay. A config file holds one `key = value` per line. */
IHMP_API ihmp_status ihmp_scenario_create(ihmp_scenario** out);
IHMP_API void ihmp_scenario_destroy(ihmp_scenario* s);
IHMP_API ihmp_status ihmp_scenario_load(ihmp_scenario* s, const char* config_path);
IHMP_API ihmp_status ihmp_scenario_set(ihmp_scenario* s, const char* key, const char* value);
IHMP_API ihmp_status ihmp_scenario_to_json(const ihmp_scenario* s, char** json);

/* ---- datasets ------------------------------------------------------------ */
IHMP_API ihmp_status ihmp_simulate(const ihmp_scenario* s, ihmp_dataset** out);
/* values: row-major T x D; labels may be NULL. */
IHMP_API ihmp_status ihmp_dataset_create(const double* values, int T, int D,
                                         const int* labels, ihmp_dataset** out);
IHMP_API ihmp_status ihmp_dataset_read(const char* path, ihmp_dataset** out);
/* Writes the CSV and its .meta.json sidecar. */
IHMP_API ihmp_status ihmp_dataset_write(const ihmp_dataset* d, const char* path);
IHMP_API ihmp_status ihmp_dataset_from_motion(const char* csv_a, const char* csv_b, int qn,
                                              uint64_t seed, ihmp_dataset** out);
IHMP_API void ihmp_dataset_destroy(ihmp_dataset* d);
IHMP_API ihmp_status ihmp_dataset_shape(const ihmp_dataset* d, int* T, int* D);
IHMP_API ihmp_status ihmp_dataset_has_labels(const ihmp_dataset* d, int* has_labels);
IHMP_API ihmp_status ihmp_dataset_values(const ihmp_dataset* d, double* buf, size_t len);
IHMP_API ihmp_status ihmp_dataset_labels(const ihmp_dataset* d, int* buf, size_t len);

/* ---- options ----------------------------------------------------------------
 * Fit keys: max_iter, tol, seed, restarts, damping, inner_sweeps,
 * anneal_iters, state_cap, cov_floor, init (parameter JSON path),
 * init_strategy (auto, codebook, shared or random),
 * beta, population, generations, mutation_rate, crossover (0/1).
 * Experiment keys: trials, jobs, T, sd, missing_ratio, alpha, jitter_var, qn,
 * algorithms (comma list), grid (comma list). */
IHMP_API ihmp_status ihmp_options_create(ihmp_options** out);
IHMP_API void ihmp_options_destroy(ihmp_options* o);
IHMP_API ihmp_status ihmp_options_set(ihmp_options* o, const char* key, const char* value);
/* Applies a `key = value` file; errors name the offending line. */
IHMP_API ihmp_status ihmp_options_load(ihmp_options* o, const char* config_path);

/* ---- fitting ------------------------------------------------------------------
 * method: em, mfvi, svi, gmm, hmm or ga. */
IHMP_API ihmp_status ihmp_fit(const ihmp_dataset* d, const char* method,
                              const int* state_counts, int num_chains,
                              const ihmp_options* o, ihmp_result** out);
IHMP_API void ihmp_result_destroy(ihmp_result* r);
IHMP_API ihmp_status ihmp_result_converged(const ihmp_result* r, int* converged);
IHMP_API ihmp_status ihmp_result_iterations(const ihmp_result* r, int* iterations);
IHMP_API ihmp_status ihmp_result_num_labels(const ihmp_result* r, int* num_labels);
IHMP_API ihmp_status ihmp_result_length(const ihmp_result* r, int* T);
IHMP_API ihmp_status ihmp_result_labels(const ihmp_result* r, int* buf, size_t len);
IHMP_API ihmp_status ihmp_result_trace_length(const ihmp_result* r, int* n);
IHMP_API ihmp_status ihmp_result_trace(const ihmp_result* r, double* buf, size_t len);
/* Matched accuracy against the dataset's source labels. */
IHMP_API ihmp_status ihmp_result_accuracy(const ihmp_result* r, const ihmp_dataset* d,
                                          double* accuracy);
/* Mean squared error of the symbol means against the dataset's generating
 * parameters (em/mfvi/svi on simulated data only). */
IHMP_API ihmp_status ihmp_result_mse(const ihmp_result* r, const ihmp_dataset* d, double* mse);
IHMP_API ihmp_status ihmp_result_to_json(const ihmp_result* r, char** json);
/* Writes <prefix>.json, <prefix>.labels.csv and <prefix>.trace.csv. */
IHMP_API ihmp_status ihmp_result_write(const ihmp_result* r, const char* prefix);

/* ---- bound, combinatorics, experiments ----------------------------------- */
IHMP_API ihmp_status ihmp_error_bound(int scenario, double sd, double* bound);
/* Row-major 2x2 matrices; means[y*2 + k]. */
IHMP_API ihmp_status ihmp_error_bound_custom(const double switch_trans[4],
                                             const double trans_a[4], const double trans_b[4],
                                             const double means[4], double sd, double* bound);
IHMP_API ihmp_status ihmp_count_partitions(int n, int imp, uint64_t* count);
/* csv: tidy rows; warnings: newline-separated, possibly empty. */
IHMP_API ihmp_status ihmp_experiment(const char* preset, const ihmp_options* o, char** csv,
                                     char** warnings);

#ifdef __cplusplus
}
#endif

#endif
