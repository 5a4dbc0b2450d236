/* millopt C interface: milling-constrained topology optimization.
 *
 * All functions return a millopt_status. On failure the thread-local message
 * from millopt_last_error() describes the cause. Handles are opaque and owned
 * by the caller until passed to the matching _free function.
 */
#ifndef MILLOPT_MILLOPT_H
#define MILLOPT_MILLOPT_H

#include <stddef.h>

#if defined(_WIN32)
#  ifdef MILLOPT_BUILDING_LIBRARY
#    define MILLOPT_API __declspec(dllexport)
#  else
#    define MILLOPT_API __declspec(dllimport)
#  endif
#else
#  define MILLOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum millopt_status {
  MILLOPT_OK = 0,
  MILLOPT_ERR_ARGUMENT = 1,
  MILLOPT_ERR_CONFIG = 2,
  MILLOPT_ERR_SOLVER = 3,
  MILLOPT_ERR_IO = 4,
  MILLOPT_ERR_INTERNAL = 5
} millopt_status;

typedef struct millopt_config millopt_config_t;
typedef struct millopt_run millopt_run_t;

typedef struct millopt_iteration {
  int iter;
  double compliance;
  double scaled_obj;
  double volfrac;
  double g;
  double change;
  int fea_iters;
  long shadow_iters;
  long adjoint_iters;
  double wall_ms;
  long filter_solves; /* density and shadow solves, forward plus adjoint */
} millopt_iteration;

typedef struct millopt_run_options {
  int deterministic;  /* single worker, fixed reduction order */
  int threads;        /* 0: hardware count, capped by MILLOPT_THREADS */
  int snapshot_every; /* write the projected field every N iterations; 0 disables */
  const char* out_dir; /* snapshots go here; may be NULL when snapshot_every == 0 */
  int csv_sidecar;    /* also write .csv copies of field files */
} millopt_run_options;

typedef struct millopt_machinability {
  int checked;    /* 0 when a direction is oblique or none is configured */
  int machinable; /* unreachable void fraction <= 0.5 % */
  long design_cells;
  long void_cells;
  long unreachable_void;
  double unreachable_fraction;
  double binary_fraction; /* share of design cells outside (0.05, 0.95) */
} millopt_machinability;

typedef void (*millopt_progress_fn)(const millopt_iteration* it, void* user);

MILLOPT_API const char* millopt_version(void);
MILLOPT_API const char* millopt_last_error(void);

MILLOPT_API millopt_status millopt_config_load(const char* path, millopt_config_t** out);
MILLOPT_API millopt_status millopt_config_parse(const char* text, millopt_config_t** out);
MILLOPT_API void millopt_config_free(millopt_config_t* cfg);
MILLOPT_API size_t millopt_config_warning_count(const millopt_config_t* cfg);
MILLOPT_API const char* millopt_config_warning(const millopt_config_t* cfg, size_t i);
/* Bypass the shadowing stage. */
MILLOPT_API millopt_status millopt_config_set_reference(millopt_config_t* cfg, int on);
MILLOPT_API millopt_status millopt_config_set_max_iters(millopt_config_t* cfg, int max_iters);
/* Resolved config text; the pointer stays valid until the next call on cfg. */
MILLOPT_API const char* millopt_config_resolved(millopt_config_t* cfg);

/* Central-difference check of compliance and volume gradients at a seeded
 * random design rho_init * U(0.5, 1.5), over n_components random design
 * variables. */
MILLOPT_API millopt_status millopt_check_gradient(const millopt_config_t* cfg, size_t n_components,
                                                  unsigned seed, double step, double* max_rel_compliance,
                                                  double* max_rel_volume);

/* Runs the optimization. On solver failure *out is still set and holds the
 * partial iteration history; the return value is MILLOPT_ERR_SOLVER. */
MILLOPT_API millopt_status millopt_run(const millopt_config_t* cfg, const millopt_run_options* opts,
                                       millopt_progress_fn progress, void* user, millopt_run_t** out);
MILLOPT_API void millopt_run_free(millopt_run_t* run);

MILLOPT_API size_t millopt_run_iteration_count(const millopt_run_t* run);
MILLOPT_API millopt_status millopt_run_iteration(const millopt_run_t* run, size_t i, millopt_iteration* out);
MILLOPT_API int millopt_run_converged(const millopt_run_t* run);
MILLOPT_API size_t millopt_run_cell_count(const millopt_run_t* run);
/* Final physical density for every cell (passive cells hold 1). */
MILLOPT_API millopt_status millopt_run_physical(const millopt_run_t* run, double* out, size_t n);
MILLOPT_API millopt_status millopt_run_machinability(const millopt_run_t* run, millopt_machinability* out);
/* Field stack, iterations.csv, resolved.toml and machinability.json. */
MILLOPT_API millopt_status millopt_run_write_outputs(const millopt_run_t* run, const char* dir, int csv_sidecar);

#ifdef __cplusplus
}
#endif

#endif
