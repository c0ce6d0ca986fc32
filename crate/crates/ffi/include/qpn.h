#ifndef QPN_H
#define QPN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes. The error classes match the CLI exit codes.
 */
typedef enum QpnStatus {
  QPN_STATUS_OK = 0,
  QPN_STATUS_VALIDATION = 2,
  QPN_STATUS_ANALYSIS = 3,
  QPN_STATUS_VERIFICATION = 4,
  QPN_STATUS_NULL_POINTER = 5,
  QPN_STATUS_INVALID_UTF8 = 6,
  QPN_STATUS_BUFFER_TOO_SMALL = 7,
  QPN_STATUS_PANIC = 8,
} QpnStatus;

/*
 Loaded model: the rate graph of a QPN, net, GSPN or composed file.
 */
typedef struct QpnModel QpnModel;

/*
 Superposition over the markings of one model.
 */
typedef struct QpnState QpnState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *qpn_version(void);

/*
 Message of the last failed call on this thread; empty after a success.

 # Safety
 `buf` must hold `cap` bytes or be null; `needed` must be writable or null.
 */
enum QpnStatus qpn_last_error(char *buf, size_t cap, size_t *needed);

/*
 Parses a model document (net, QPN, GSPN or composed JSON) and builds its
 rate graph with at most `max_states` markings.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum QpnStatus qpn_model_from_json(const char *json, size_t max_states, struct QpnModel **out);

/*
 # Safety
 `model` must come from [`qpn_model_from_json`] and not be used afterwards.
 */
void qpn_model_free(struct QpnModel *model);

/*
 Number of reachable markings.

 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum QpnStatus qpn_model_dim(const struct QpnModel *model, size_t *out);

/*
 Monomial text of marking `index` in canonical order.

 # Safety
 `model` must be a live handle; `buf` must hold `cap` bytes or be null.
 */
enum QpnStatus qpn_model_marking(const struct QpnModel *model,
                                 size_t index,
                                 char *buf,
                                 size_t cap,
                                 size_t *needed);

/*
 Rate matrix (or its row-normalised form) into `out`, which must hold
 `2 * dim * dim` doubles.

 # Safety
 `model` must be a live handle; `out` must hold `len` doubles.
 */
enum QpnStatus qpn_model_rate_matrix(const struct QpnModel *model,
                                     bool normal,
                                     double *out,
                                     size_t len);

/*
 Basis state on the initial marking.

 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum QpnStatus qpn_state_initial(const struct QpnModel *model, struct QpnState **out);

/*
 State from `dim` interleaved amplitudes.

 # Safety
 `model` must be a live handle; `amps` must hold `len` doubles.
 */
enum QpnStatus qpn_state_from_amplitudes(const struct QpnModel *model,
                                         const double *amps,
                                         size_t len,
                                         struct QpnState **out);

/*
 # Safety
 `state` must come from this library and not be used afterwards.
 */
void qpn_state_free(struct QpnState *state);

/*
 `steps` edge-sum evolution steps of `state` under `model` into a new state.

 # Safety
 Both handles must be live; `out` must be writable.
 */
enum QpnStatus qpn_evolve(const struct QpnModel *model,
                          const struct QpnState *state,
                          size_t steps,
                          struct QpnState **out);

/*
 Interleaved amplitudes; `out` must hold `2 * dim` doubles.

 # Safety
 `state` must be a live handle; `out` must hold `len` doubles.
 */
enum QpnStatus qpn_state_amplitudes(const struct QpnState *state, double *out, size_t len);

/*
 Born probabilities `|a_m|^2 / ||a||^2`; `out` must hold `dim` doubles.

 # Safety
 `state` must be a live handle; `out` must hold `len` doubles.
 */
enum QpnStatus qpn_state_probabilities(const struct QpnState *state, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPN_H */
