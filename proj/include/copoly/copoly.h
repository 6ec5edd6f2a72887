/* Periodic copolymer / pinning models: C interface.
 *
 * All functions return a copoly_status. On failure, copoly_last_error()
 * returns a message for the calling thread, valid until the next call on
 * that thread. Strings handed out through char** parameters are owned by the
 * caller and must be released with copoly_string_free.
 */
#ifndef COPOLY_COPOLY_H
#define COPOLY_COPOLY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COPOLY_API __declspec(dllexport)
#else
#define COPOLY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum copoly_status {
  COPOLY_OK = 0,
  COPOLY_INVALID_INPUT = 1,
  COPOLY_NUMERICAL = 2,
  COPOLY_INVALID_STATE = 3,
  COPOLY_INTERNAL = 4
} copoly_status;

typedef enum copoly_endpoint {
  COPOLY_CONSTRAINED = 0,
  COPOLY_FREE = 1
} copoly_endpoint;

typedef enum copoly_regime {
  COPOLY_LOCALIZED = 0,
  COPOLY_CRITICAL = 1,
  COPOLY_DELOCALIZED = 2
} copoly_regime;

typedef struct copoly_tolerances {
  double h_zero;
  double sigma_zero;
  double critical;
} copoly_tolerances;

typedef struct copoly_model copoly_model;

COPOLY_API const char* copoly_version(void);
COPOLY_API const char* copoly_last_error(void);
COPOLY_API void copoly_string_free(char* s);
COPOLY_API copoly_tolerances copoly_default_tolerances(void);

/* Charges are given as T values for epochs 1..T. omega_zero_tilde may be
 * NULL (all zero). tol may be NULL for the defaults. x_max is the kernel
 * table length and bounds every horizon used with the model. */
COPOLY_API copoly_status copoly_model_create(
    int T, const double* omega_plus, const double* omega_minus,
    const double* omega_zero, const double* omega_zero_tilde, double p,
    int64_t x_max, const copoly_tolerances* tol, copoly_model** out);
COPOLY_API void copoly_model_destroy(copoly_model* m);

COPOLY_API copoly_status copoly_model_delta(copoly_model* m, double* out);
COPOLY_API copoly_status copoly_model_free_energy(copoly_model* m, double* out);
COPOLY_API copoly_status copoly_model_regime(copoly_model* m, copoly_regime* out);

/* log Z of length n for the canonical charges shifted by `shift` (the raw
 * model differs by the removed omega_plus summed over the epochs). */
COPOLY_API copoly_status copoly_log_partition(copoly_model* m,
                                              copoly_endpoint endpoint,
                                              int64_t shift, int64_t n,
                                              double* out);

/* Regime, delta, F, mu, constants, tail error and membership in the
 * boundary-sensitive class, as a JSON object. */
COPOLY_API copoly_status copoly_classify_json(copoly_model* m, char** json);

/* Convergence table of Z against its sharp asymptotics along N_list (all
 * N = eta mod T). Writes CSV with columns N,log_Z,log_prediction,ratio and
 * sets *trend_ok to 1 if |ratio - 1| is nonincreasing. */
COPOLY_API copoly_status copoly_verify_csv(copoly_model* m, int eta,
                                           const int64_t* N_list, size_t n,
                                           copoly_endpoint endpoint,
                                           char** csv, int* trend_ok);

/* Sign constants and renewal constants (c_beta, Green function ratios) for
 * the regimes where they are defined, as JSON. */
COPOLY_API copoly_status copoly_constants_json(copoly_model* m, char** json);

/* Samples polymer paths. options_json keys (all optional):
 *   N, count, endpoint ("constrained" | "free"), seed, workers,
 *   full_paths (bool), paths (number of paths to return in paths_csv),
 *   eta, t_grid, L_grid, C_grid.
 * report_json receives the statistics report; paths_csv, if not NULL,
 * receives sample,n,S_n rows for the first `paths` samples. */
COPOLY_API copoly_status copoly_sample_json(copoly_model* m,
                                            const char* options_json,
                                            char** report_json,
                                            char** paths_csv);

/* Exhaustive gap-probability bound check for all horizons up to N. */
COPOLY_API copoly_status copoly_gap_bound_check(copoly_model* m, int64_t N,
                                                int* holds, double* worst);

/* Batch of random zero-mean copolymers. options_json keys: count, T_min,
 * T_max, p, x_max, seed, amplitude. */
COPOLY_API copoly_status copoly_localization_check_json(
    const char* options_json, char** json);

#ifdef __cplusplus
}
#endif

#endif /* COPOLY_COPOLY_H */
