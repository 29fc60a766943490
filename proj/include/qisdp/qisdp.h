/* C interface to the qisdp solver and its applications. */
#ifndef QISDP_H
#define QISDP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef QISDP_BUILD
#    define QISDP_API __declspec(dllexport)
#  else
#    define QISDP_API __declspec(dllimport)
#  endif
#else
#  define QISDP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qisdp_error {
  QISDP_OK = 0,
  QISDP_E_INVALID_ARGUMENT = 1,
  QISDP_E_DIMENSION = 2,
  QISDP_E_PARSE = 3,
  QISDP_E_IO = 4,
  QISDP_E_NUMERICAL = 5,
  QISDP_E_MODEL = 6,
  QISDP_E_INTERNAL = 7
} qisdp_error;

/* Solver status codes carried by results. */
enum {
  QISDP_STATUS_SUCCESS = 0,
  QISDP_STATUS_PRIMAL_INFEASIBLE = 1,
  QISDP_STATUS_DUAL_INFEASIBLE = 2,
  QISDP_STATUS_LACK_OF_PROGRESS = -1,
  QISDP_STATUS_ITERATION_LIMIT = -6,
  QISDP_STATUS_NUMERICAL_FAILURE = -7
};

typedef struct qisdp_config qisdp_config;
typedef struct qisdp_problem qisdp_problem;
typedef struct qisdp_result qisdp_result;

/* Message of the last failed call on this thread; never NULL. */
QISDP_API const char* qisdp_last_error(void);
QISDP_API const char* qisdp_version(void);

/* Configuration. Setters validate their argument. */
QISDP_API qisdp_error qisdp_config_new(qisdp_config** out);
QISDP_API void qisdp_config_free(qisdp_config* c);
QISDP_API qisdp_error qisdp_config_set_tol(qisdp_config* c, double tol);
QISDP_API qisdp_error qisdp_config_set_max_iterations(qisdp_config* c, int maxit);
QISDP_API qisdp_error qisdp_config_set_direction(qisdp_config* c, const char* name);  /* "hkm", "nt" */
QISDP_API qisdp_error qisdp_config_set_framing(qisdp_config* c, const char* name);    /* "dual", "primal" */
QISDP_API qisdp_error qisdp_config_set_equalities(qisdp_config* c, const char* name); /* "split", "eliminate", "ineq" */
QISDP_API qisdp_error qisdp_config_set_seed(qisdp_config* c, uint64_t seed);

/* Canonical cone problems. */
QISDP_API qisdp_error qisdp_problem_parse_sdpa(const char* text, qisdp_problem** out);
QISDP_API qisdp_error qisdp_problem_read(const char* path, qisdp_problem** out); /* SDPA, or .json model compiled with cfg defaults */
QISDP_API void qisdp_problem_free(qisdp_problem* p);
QISDP_API qisdp_error qisdp_problem_dims(const qisdp_problem* p, int* m, int* sdp_blocks, int* nonneg, int* free_dim);
/* Caller releases the string with qisdp_string_free. */
QISDP_API qisdp_error qisdp_problem_write_sdpa(const qisdp_problem* p, char** out);
QISDP_API qisdp_error qisdp_problem_solve(const qisdp_problem* p, const qisdp_config* c, qisdp_result** out);
QISDP_API void qisdp_string_free(char* s);

/* Subcommands. cfg may be NULL for defaults. */
QISDP_API qisdp_error qisdp_run_solve(const char* path, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_npa(const char* scenario, const char* level, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_mlp(const char* scenario, const char* level, int dim, const qisdp_config* cfg,
                                    qisdp_result** out);
QISDP_API qisdp_error qisdp_run_nv(const char* scenario, int level, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_theta(const char* graph, int weighted, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_dps(const char* state, int k, int ppt, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_dps_werner(double p, int k, int ppt, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_qsd(const char* states, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_seesaw(const char* scenario, int restarts, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_sos(const char* polynomial, const qisdp_config* cfg, qisdp_result** out);
QISDP_API qisdp_error qisdp_run_tsirelson_sos(const qisdp_config* cfg, qisdp_result** out);

/* Results. Returned strings live as long as the result. */
QISDP_API void qisdp_result_free(qisdp_result* r);
QISDP_API int qisdp_result_status(const qisdp_result* r);
QISDP_API double qisdp_result_value(const qisdp_result* r);
QISDP_API double qisdp_result_max_dimacs(const qisdp_result* r);
QISDP_API const char* qisdp_result_json(const qisdp_result* r, int include_time);
QISDP_API const char* qisdp_result_text(const qisdp_result* r, int verbose);

#ifdef __cplusplus
}
#endif

#endif /* QISDP_H */
