#ifndef STAR_PLS_H
#define STAR_PLS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StarStatus {
  STAR_STATUS_OK = 0,
  STAR_STATUS_NULL_POINTER = 1,
  STAR_STATUS_INVALID_CONFIG = 2,
  STAR_STATUS_INVALID_ARGUMENT = 3,
  STAR_STATUS_SOLVER_ERROR = 4,
  STAR_STATUS_IO_ERROR = 5,
  STAR_STATUS_PANIC = 6,
} StarStatus;

typedef enum StarScheme {
  STAR_SCHEME_PROPOSED = 0,
  STAR_SCHEME_ZF = 1,
  STAR_SCHEME_CONVENTIONAL_RIS = 2,
} StarScheme;

typedef struct StarChannels StarChannels;

typedef struct StarConfig StarConfig;

typedef struct StarResult StarResult;

// Rates of a solution in bits/s/Hz.
typedef struct StarRates {
  double r_b;
  double r_c;
  // Large-system average secrecy rate of the reflection user, clamped at zero.
  double r_b_sec;
  double objective;
} StarRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread. Empty if nothing failed.
const char *star_last_error(void);

// Desk-scale defaults with a 30 dBm budget.
struct StarConfig *star_config_desk(void);

struct StarConfig *star_config_full_scale(void);

// Parses a JSON config document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum StarStatus star_config_from_json(const char *json, struct StarConfig **out);

// # Safety
// `cfg` must come from this library and not be used afterwards. Null is ignored.
void star_config_free(struct StarConfig *cfg);

// Sets the element count. The config is left unchanged on error.
//
// # Safety
// `cfg` must be a live config handle.
enum StarStatus star_config_set_m(struct StarConfig *cfg, size_t m);

// # Safety
// `cfg` must be a live config handle.
enum StarStatus star_config_set_n_t(struct StarConfig *cfg, size_t n_t);

// # Safety
// `cfg` must be a live config handle.
enum StarStatus star_config_set_lambda_bits(struct StarConfig *cfg, uint32_t bits);

// # Safety
// `cfg` must be a live config handle.
enum StarStatus star_config_set_p_tmax_dbm(struct StarConfig *cfg, double dbm);

// # Safety
// `cfg` must be a live config handle.
enum StarStatus star_config_set_p1(struct StarConfig *cfg, double p1);

// Channel realization for `seed`, the same one the CLI uses.
//
// # Safety
// `cfg` must be a live config handle and `out` a valid pointer.
enum StarStatus star_channels_generate(const struct StarConfig *cfg,
                                       uint64_t seed,
                                       struct StarChannels **out);

// # Safety
// `ch` must come from this library and not be used afterwards. Null is ignored.
void star_channels_free(struct StarChannels *ch);

// Runs `scheme` on `ch` with solver randomness drawn from `seed`.
//
// # Safety
// `cfg` and `ch` must be live handles and `out` a valid pointer.
enum StarStatus star_optimize(const struct StarConfig *cfg,
                              const struct StarChannels *ch,
                              uint64_t seed,
                              enum StarScheme scheme,
                              struct StarResult **out);

// # Safety
// `res` must come from this library and not be used afterwards. Null is ignored.
void star_result_free(struct StarResult *res);

// # Safety
// `res` must be a live result handle and `out` a valid pointer.
enum StarStatus star_result_rates(const struct StarResult *res, struct StarRates *out);

// Objective value, NaN for a null handle.
//
// # Safety
// `res` must be null or a live result handle.
double star_result_objective(const struct StarResult *res);

// # Safety
// `res` must be null or a live result handle.
size_t star_result_outer_iterations(const struct StarResult *res);

// # Safety
// `res` must be null or a live result handle.
bool star_result_converged(const struct StarResult *res);

// Number of trajectory entries (initial point plus one per outer iteration).
//
// # Safety
// `res` must be null or a live result handle.
size_t star_result_trajectory_len(const struct StarResult *res);

// Copies the trajectory into `buf`, which holds `len` doubles.
//
// # Safety
// `buf` must be writable for `len` doubles.
enum StarStatus star_result_trajectory(const struct StarResult *res, double *buf, size_t len);

// BS antenna count of the solution.
//
// # Safety
// `res` must be null or a live result handle.
size_t star_result_n_t(const struct StarResult *res);

// Writes both precoders as interleaved (re, im) pairs. Each buffer must hold
// `2 * n_t` doubles.
//
// # Safety
// `w_b` and `w_c` must be writable for `2 * n_t` doubles.
enum StarStatus star_result_beamformers(const struct StarResult *res,
                                        double *w_b,
                                        double *w_c,
                                        size_t n_t);

// # Safety
// `res` must be null or a live result handle.
size_t star_result_m(const struct StarResult *res);

// Writes the reflection amplitudes and both phase index vectors, `m` entries each.
//
// # Safety
// Each buffer must be writable for `m` elements.
enum StarStatus star_result_coefficients(const struct StarResult *res,
                                         double *beta_r,
                                         uint32_t *phase_idx_r,
                                         uint32_t *phase_idx_t,
                                         size_t m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAR_PLS_H */
