/*
 * tslv — permanence and stability analysis of impulsive delayed
 * competition-predation systems on time scales.
 *
 * C binding. All functions return a status code (TSLV_OK on success); on
 * failure tslv_last_error() returns a thread-local description valid until
 * the next failing call on the same thread. Strings returned through char**
 * out-parameters are heap-allocated JSON documents; release them with
 * tslv_string_free().
 */
#ifndef TSLV_H
#define TSLV_H

#include <stddef.h>

#if defined(_WIN32)
#define TSLV_API __declspec(dllexport)
#else
#define TSLV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes (stable). */
enum {
  TSLV_OK = 0,
  TSLV_ERR_IO = 1,         /* file could not be read / written */
  TSLV_ERR_PARSE = 2,      /* malformed expression or model document */
  TSLV_ERR_VALIDATION = 3, /* well-formed document violating a structural rule */
  TSLV_ERR_DOMAIN = 4,     /* argument outside an operation's domain */
  TSLV_ERR_HYPOTHESIS = 5, /* a closed-form bound's hypothesis fails */
  TSLV_ERR_SIMULATION = 6, /* trajectory left the admissible region */
  TSLV_ERR_USAGE = 7,      /* bad arguments or call sequence */
  TSLV_ERR_INTERNAL = 8    /* invariant breach; indicates a bug */
};

/* History interpolation for delayed state lookups (continuous time). */
enum {
  TSLV_INTERP_HERMITE = 0,
  TSLV_INTERP_LINEAR = 1,
  TSLV_INTERP_HOLD_LEFT = 2
};

typedef struct tslv_model tslv_model; /* opaque */

TSLV_API const char* tslv_version(void);

/* Thread-local message for the most recent failure on this thread. */
TSLV_API const char* tslv_last_error(void);

/* Release a string returned through a char** out-parameter. NULL is a no-op. */
TSLV_API void tslv_string_free(char* s);

/* ------------------------------------------------------------------ models */

TSLV_API int tslv_model_load_file(const char* path, tslv_model** out);
TSLV_API int tslv_model_load_string(const char* json_text, tslv_model** out);

/* Bundled example systems; id is 1 or 2. */
TSLV_API int tslv_bundled_model(int id, tslv_model** out);

TSLV_API void tslv_model_free(tslv_model* model);

/* Dimensions and identity as JSON:
 * {"name", "hash", "n", "m", "t0", "time_scale", "has_impulses"} */
TSLV_API int tslv_model_info(const tslv_model* model, char** json_out);

/* ---------------------------------------------------------------- analysis */

typedef struct {
  int use_override;      /* apply the model's stats_override block (default 1) */
  double sample_window;  /* coefficient scan window length (default 2000) */
  int points_per_unit;   /* coefficient scan density (default 40) */
  long impulse_horizon;  /* jump products evaluated for k = 1..horizon (200) */
} tslv_check_options;

TSLV_API void tslv_check_options_init(tslv_check_options* opts);

/* Statistics, hypothesis report, permanence box and decay certificate as one
 * JSON document. *ok_out (optional) is 1 when the certificate verdict holds
 * and no hypothesis fails. */
TSLV_API int tslv_check(const tslv_model* model, const tslv_check_options* opts,
                        char** json_out, int* ok_out);

/* -------------------------------------------------------------- simulation */

typedef struct {
  double step;               /* continuous-time step (ignored on lattices) */
  double horizon;            /* simulated duration past t0 */
  double transient_fraction; /* prefix excluded from tail statistics [0,1) */
  unsigned long long seed;   /* RNG seed for the default initial state */
  const double* z0;          /* optional initial prey state, length n */
  const double* w0;          /* optional initial predator state, length m */
  int interp;                /* TSLV_INTERP_* */
} tslv_sim_options;

TSLV_API void tslv_sim_options_init(tslv_sim_options* opts);

/* Simulate; optionally stream the trajectory to csv_path (thin >= 1 keeps
 * every thin-th row plus impulse pairs and the final row). The summary JSON
 * reports the tail box, impulse count and any warnings. */
TSLV_API int tslv_simulate(const tslv_model* model, const tslv_sim_options* opts,
                           const char* csv_path, int thin, char** json_out);

/* ---------------------------------------------------------------- verify */

typedef struct {
  tslv_check_options check;
  tslv_sim_options sim;
  double eps;          /* tail tolerance around the certified box (default 0.05) */
  double gap_limit;    /* required two-trajectory contraction (default 0.01) */
  double perturbation; /* log-offset of the comparison trajectory (default 0.2) */
} tslv_verify_options;

TSLV_API void tslv_verify_options_init(tslv_verify_options* opts);

/* Certified box vs simulated tails plus the two-trajectory gap.
 * *verdict_out (optional) is 1 when tails and gap are both consistent. */
TSLV_API int tslv_verify(const tslv_model* model, const tslv_verify_options* opts,
                         char** json_out, int* verdict_out);

/* -------------------------------------------------------------- reproduce */

/* Recompute the bundled example's reference quantities; id is 1 or 2.
 * *all_ok_out (optional) is 1 when every quantity is within tolerance. */
TSLV_API int tslv_reproduce(int id, char** json_out, int* all_ok_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TSLV_H */
