#ifndef RCR_H
#define RCR_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque handle to a parsed or generated model. */
typedef struct rcr_model rcr_model;

typedef enum rcr_status {
  RCR_OK = 0,
  RCR_ERR_PARSE = 1,
  RCR_ERR_CAPACITY = 2,
  RCR_ERR_NOT_COUNT_NORMALIZED = 3,
  RCR_ERR_NO_FEASIBLE_WORLD = 4,
  RCR_ERR_INVALID_ARGUMENT = 5,
  RCR_ERR_INFERENCE = 6,
  RCR_ERR_IO = 7,
  RCR_ERR_UNKNOWN = 8
} rcr_status;

/* Message for the most recent failure on this thread. */
const char* rcr_last_error(void);

rcr_status rcr_model_parse(const char* text, rcr_model** out);
rcr_status rcr_model_parse_file(const char* path, rcr_model** out);
/* Built-in generators: smokers, smokers_drinkers, symmetric_smokers. */
rcr_status rcr_model_generate(const char* name, int size, rcr_model** out);
void rcr_model_free(rcr_model* model);

/* Strings returned through out parameters are heap-allocated; release them
 * with rcr_string_free. */
void rcr_string_free(char* s);

/* The model rendered back in the input text format. */
rcr_status rcr_model_print(const rcr_model* model, char** out_text);

/* Ground model: counts as JSON, or the full grounding in text format. */
rcr_status rcr_ground_summary(const rcr_model* model, char** out_json);
rcr_status rcr_ground_text(const rcr_model* model, char** out_text);

/* Exact marginals: {"logZ": float, "marginals": {"atom": float, ...}}.
 * engine is "ve" or "brute". */
rcr_status rcr_exact_json(const rcr_model* model, const char* engine, char** out_json);

/* Preemptive-shattering report: cells, counts, and normalization status per
 * first-order equivalence. */
rcr_status rcr_shatter_json(const rcr_model* model, char** out_json);

typedef struct rcr_run_options {
  int lifted;               /* 1 = lifted mode, 0 = ground mode */
  double recover_fraction;  /* fraction of ground equivalences; < 0 disables */
  long recover_count;       /* first-order cells to recover; < 0 disables */
  int batch_k;              /* cells recovered per outer step */
  double damping;           /* in (0, 1] */
  double tol;
  long max_iters;
  int sequential;           /* 1 = sequential schedule, 0 = simultaneous */
  unsigned long long seed;
} rcr_run_options;

/* Fills in the defaults: lifted, no recovery, damping 0.5, tol 1e-8,
 * max_iters 1000, sequential schedule. */
void rcr_run_options_init(rcr_run_options* opts);

/* Runs the relax-compensate-recover pipeline. marginals_json receives
 * {"converged": bool, "marginals": {...}, "recovered": {...}}; audit_jsonl
 * and trace_csv are optional (pass NULL to skip). out_converged may be NULL. */
rcr_status rcr_run(const rcr_model* model, const rcr_run_options* opts, char** marginals_json,
                   char** audit_jsonl, char** trace_csv, int* out_converged);

/* Sweeps recovery levels and reports one CSV row per grid point. */
rcr_status rcr_eval_sweep(const rcr_model* model, const char* model_name,
                          const rcr_run_options* opts, const double* grid, size_t grid_len,
                          char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* RCR_H */
