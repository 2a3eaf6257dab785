#ifndef CPNS_H
#define CPNS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpnsStatus {
  CPNS_STATUS_OK = 0,
  CPNS_STATUS_NULL_POINTER = 1,
  CPNS_STATUS_INVALID_ARGUMENT = 2,
  CPNS_STATUS_CONFIG = 3,
  CPNS_STATUS_NUMERICAL = 4,
  CPNS_STATUS_IO = 5,
  CPNS_STATUS_PANIC = 6,
} CpnsStatus;

typedef enum CpnsBathFamily {
  CPNS_BATH_FAMILY_FLAT = 0,
  CPNS_BATH_FAMILY_LORENTZIAN = 1,
  CPNS_BATH_FAMILY_OHMIC_EXP_CUTOFF = 2,
} CpnsBathFamily;

typedef struct CpnsHistory CpnsHistory;

/**
 * Generator, kernel and initial state.
 */
typedef struct CpnsModel CpnsModel;

/**
 * Two-level model parameters. Bath fields unused by `bath_family` are ignored;
 * `reference` is taken equal to `omega0`.
 */
typedef struct CpnsTlsParams {
  double omega0;
  double rabi;
  double drive;
  double gamma_m;
  double gamma_m_bar;
  enum CpnsBathFamily bath_family;
  double coupling;
  double c_white;
  double amplitude;
  double width;
  double cutoff;
} CpnsTlsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *cpns_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *cpns_version(void);

/**
 * Two-level model in the rotating frame, starting in the ground state.
 *
 * # Safety
 * `params` must point to a valid struct and `out` to writable storage.
 */
enum CpnsStatus cpns_model_new_tls(const struct CpnsTlsParams *params, struct CpnsModel **out);

/**
 * Model described by a TOML run configuration file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` writable.
 */
enum CpnsStatus cpns_model_load(const char *path, struct CpnsModel **out);

/**
 * Hilbert-space dimension of the model, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t cpns_model_dim(const struct CpnsModel *model);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void cpns_model_free(struct CpnsModel *model);

/**
 * Integrate from `t = 0` to `t_final`. `memory_window < 0` keeps the model's default
 * window; `memory_window == 0` disables truncation only for memoryless models.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum CpnsStatus cpns_propagate(const struct CpnsModel *model,
                               double dt,
                               double t_final,
                               double memory_window,
                               struct CpnsHistory **out);

/**
 * Number of stored grid points, 0 for a null handle.
 *
 * # Safety
 * `history` must be null or a live handle.
 */
size_t cpns_history_len(const struct CpnsHistory *history);

/**
 * # Safety
 * `history` must be null or a live handle.
 */
size_t cpns_history_dim(const struct CpnsHistory *history);

/**
 * Copy state `k` into `out` (`2 dim^2` doubles, row-major, re/im interleaved).
 *
 * # Safety
 * `history` must be a live handle and `out` must hold `len` doubles.
 */
enum CpnsStatus cpns_history_state(const struct CpnsHistory *history,
                                   size_t k,
                                   double *out,
                                   size_t len);

/**
 * # Safety
 * `history` must be null or a handle not yet freed.
 */
void cpns_history_free(struct CpnsHistory *history);

/**
 * `gamma_NM(omega)` of the bath in `params`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum CpnsStatus cpns_gamma_nm(const struct CpnsTlsParams *params,
                              double omega,
                              double *re,
                              double *im);

/**
 * Closed-form triplet spectrum at `n` offsets from the transition frequency.
 *
 * # Safety
 * `omega` and `out` must each hold `n` doubles.
 */
enum CpnsStatus cpns_mollow_analytic(const struct CpnsTlsParams *params,
                                     const double *omega,
                                     size_t n,
                                     double *out);

/**
 * Numeric emission spectrum: propagate to `t_star`, correlate up to `tau_max`.
 *
 * # Safety
 * `omega` and `out` must each hold `n` doubles.
 */
enum CpnsStatus cpns_mollow_numeric(const struct CpnsTlsParams *params,
                                    double dt,
                                    double t_star,
                                    double tau_max,
                                    const double *omega,
                                    size_t n,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPNS_H */
