/* C interface to the latentsr symbolic regression engine.
 *
 * Every function returns an lsr_status. On failure a description of the last
 * error on the calling thread is available from lsr_last_error(). Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with lsr_string_free(). */
#ifndef LATENTSR_LATENTSR_H
#define LATENTSR_LATENTSR_H

#include <stddef.h>
#include <stdint.h>

#if defined(LSR_BUILDING_LIBRARY)
#define LSR_API __attribute__((visibility("default")))
#else
#define LSR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lsr_status {
  LSR_OK = 0,
  LSR_E_DOMAIN = 1,
  LSR_E_SYNTAX = 2,
  LSR_E_RANGE = 3,
  LSR_E_LENGTH = 4,
  LSR_E_SHAPE = 5,
  LSR_E_GENERATION_TIMEOUT = 6,
  LSR_E_NON_FINITE_LOSS = 7,
  LSR_E_DEGENERATE = 8,
  LSR_E_ALL_RESTARTS_FAILED = 9,
  LSR_E_IO = 10,
  LSR_E_INVALID_ARGUMENT = 11,
  LSR_E_INTERNAL = 99
} lsr_status;

typedef struct lsr_expr lsr_expr;
typedef struct lsr_model lsr_model;
typedef struct lsr_dataset lsr_dataset;

LSR_API const char* lsr_version(void);
LSR_API const char* lsr_last_error(void);
LSR_API void lsr_string_free(char* s);

/* Expressions. Prefix text is whitespace-separated tokens, e.g.
 * "add x0 mul + 2500 E-3 x1"; BOS/EOS are optional. */
LSR_API lsr_status lsr_expr_from_prefix(const char* tokens, lsr_expr** out);
LSR_API void lsr_expr_free(lsr_expr* e);
LSR_API lsr_status lsr_expr_eval(const lsr_expr* e, const double* x, size_t n, double* out);
LSR_API lsr_status lsr_expr_complexity(const lsr_expr* e, size_t* out);
LSR_API lsr_status lsr_expr_to_text(const lsr_expr* e, char** out);
LSR_API lsr_status lsr_expr_to_prefix(const lsr_expr* e, char** out);

/* Numeric tokens: "+ 7895 E-4" style triples. */
LSR_API lsr_status lsr_tokenize_float(double v, char** out);
LSR_API lsr_status lsr_detokenize_float(const char* tokens, double* out);
LSR_API lsr_status lsr_edit_distance(const char* a, const char* b, size_t* out);

/* Metrics. */
LSR_API lsr_status lsr_kl_divergence(const double* mean_q, const double* var_q, const double* mean_p,
                                     const double* var_p, size_t dim, double* out);
LSR_API lsr_status lsr_r2(const double* y, const double* yhat, size_t n, double* out);
LSR_API lsr_status lsr_fitness(double r2, size_t complexity, double omega, double* out);
/* ranks is methods x metrics, row-major, lower is better; fronts receives
 * one front index per method (1 = non-dominated). */
LSR_API lsr_status lsr_pareto_rank(const double* ranks, size_t methods, size_t metrics, int* fronts);

/* Datasets. */
LSR_API lsr_status lsr_dataset_load_csv(const char* path, lsr_dataset** out);
LSR_API lsr_status lsr_dataset_from_arrays(const double* x, const double* y, size_t n, int dim,
                                           lsr_dataset** out);
LSR_API void lsr_dataset_free(lsr_dataset* d);
LSR_API size_t lsr_dataset_size(const lsr_dataset* d);

/* Models. */
LSR_API lsr_status lsr_model_load(const char* checkpoint, lsr_model** out);
LSR_API void lsr_model_free(lsr_model* m);
/* JSON object with the model configuration and parameter count. */
LSR_API lsr_status lsr_model_info(const lsr_model* m, char** out_json);
/* Prior-branch mean and variance; both arrays hold latent_dim values. */
LSR_API lsr_status lsr_localize(const lsr_model* m, const lsr_dataset* d, double* mean, double* var);
/* Runs one search; options_json holds "search" settings and "seed" as in a
 * run configuration. Result JSON has status, expr, r2, complexity, fitness,
 * time_s; a degenerate search reports status "failed" with a null expr. */
LSR_API lsr_status lsr_search(const lsr_model* m, const lsr_dataset* d, const char* options_json, int jobs,
                              char** out_json);

/* Run configurations. */
LSR_API lsr_status lsr_config_default(const char* command, char** out_json);
/* Validates and normalizes a configuration (seed derivation, defaults). */
LSR_API lsr_status lsr_config_resolve(const char* config_json, char** out_json);
LSR_API lsr_status lsr_config_extract(const char* artifact_path, char** out_json);

typedef void (*lsr_progress_fn)(const char* line, void* user);

/* Executes config.command, writing the main artifact to out_path. aux_path
 * is the training log, search trace or bench summary; pareto_path the bench
 * Pareto report. Unused paths may be NULL. summary_json may be NULL. */
LSR_API lsr_status lsr_run(const char* config_json, const char* out_path, const char* aux_path,
                           const char* pareto_path, int jobs, lsr_progress_fn progress, void* user,
                           char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
