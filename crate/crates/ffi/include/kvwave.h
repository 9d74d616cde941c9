#ifndef KVWAVE_H
#define KVWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum KvStatus {
  KV_STATUS_OK = 0,
  KV_STATUS_NULL_POINTER = 1,
  KV_STATUS_INVALID_ARGUMENT = 2,
  KV_STATUS_PARSE = 3,
  KV_STATUS_VALIDATION = 4,
  KV_STATUS_DIMENSION_MISMATCH = 5,
  KV_STATUS_BUFFER_TOO_SMALL = 6,
  KV_STATUS_SINGULAR = 7,
  KV_STATUS_NUMERICAL = 8,
  KV_STATUS_TOO_LARGE = 9,
  KV_STATUS_IO = 10,
  KV_STATUS_PANIC = 11,
} KvStatus;

/**
 * Parsed experiment: system, numerics, initial data.
 */
typedef struct KvConfig KvConfig;

/**
 * Assembled generator for one config and resolution.
 */
typedef struct KvGenerator KvGenerator;

/**
 * Sampled energy history of a simulation.
 */
typedef struct KvTrace KvTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `cap - 1` bytes. Returns the full
 * message length excluding the terminator; `buf` may be null to query it.
 */
size_t kv_last_error_message(char *buf, size_t cap);

/**
 * Parses an INI experiment description.
 */
enum KvStatus kv_config_parse(const char *text, struct KvConfig **out_cfg);

void kv_config_free(struct KvConfig *cfg);

/**
 * Smallness condition on the coupling amplitude. `threshold` is `+inf` when
 * the case imposes none.
 */
enum KvStatus kv_config_ssc(const struct KvConfig *cfg,
                            double *threshold,
                            double *actual,
                            bool *satisfied);

/**
 * Assembles the generator with `n` interior nodes; `n = 0` takes the value
 * from the config.
 */
enum KvStatus kv_generator_new(const struct KvConfig *cfg, size_t n, struct KvGenerator **out_gen);

void kv_generator_free(struct KvGenerator *gen);

/**
 * State dimension `4 n`; zero for a null handle.
 */
size_t kv_generator_dim(const struct KvGenerator *gen);

/**
 * Largest frequency the grid represents faithfully.
 */
double kv_generator_resolution_limit(const struct KvGenerator *gen);

/**
 * Writes the config's initial data, normalized to unit energy norm.
 */
enum KvStatus kv_initial_state(const struct KvGenerator *gen,
                               const struct KvConfig *cfg,
                               double *state,
                               size_t len);

/**
 * `out = A state`.
 */
enum KvStatus kv_apply(const struct KvGenerator *gen,
                       const double *state,
                       size_t len,
                       double *result,
                       size_t result_len);

/**
 * Discrete energy of a state.
 */
enum KvStatus kv_energy(const struct KvGenerator *gen,
                        const double *state,
                        size_t len,
                        double *energy);

/**
 * Energy dissipation rate `dE/dt` of a state; never positive.
 */
enum KvStatus kv_dissipation_rate(const struct KvGenerator *gen,
                                  const double *state,
                                  size_t len,
                                  double *rate);

/**
 * All `4 n` eigenvalues of the generator. `re` and `im` must each hold
 * `kv_generator_dim(gen)` values. `strongly_stable` applies the roundoff-aware
 * verdict; it may be null.
 */
enum KvStatus kv_eigenvalues(const struct KvGenerator *gen,
                             double *re,
                             double *im,
                             size_t cap,
                             double *max_real_part,
                             bool *strongly_stable);

/**
 * `‖(iλ - A)⁻¹‖` in the energy norm. Returns `KV_STATUS_SINGULAR` when `iλ`
 * is numerically an eigenvalue.
 */
enum KvStatus kv_resolvent_norm(const struct KvGenerator *gen, double lambda, double *norm);

/**
 * Crank-Nicolson run from `state` to `t_final`. The final state overwrites
 * `state`; the sampled energy history is returned as a trace handle.
 */
enum KvStatus kv_simulate(const struct KvGenerator *gen,
                          double *state,
                          size_t len,
                          double dt,
                          double t_final,
                          size_t sample_every,
                          struct KvTrace **out_trace);

void kv_trace_free(struct KvTrace *trace);

/**
 * Number of samples; zero for a null handle.
 */
size_t kv_trace_len(const struct KvTrace *trace);

/**
 * Copies sample times, energies and dissipation rates. Any of the three
 * buffers may be null to skip it; each non-null one must hold
 * `kv_trace_len(trace)` values.
 */
enum KvStatus kv_trace_samples(const struct KvTrace *trace,
                               double *t,
                               double *energy,
                               double *dissipation,
                               size_t cap);

/**
 * Fits `E(t) ≈ C t^(-alpha)` on `[window_fraction T, T]`. `residual` may be
 * null.
 */
enum KvStatus kv_decay_fit(const struct KvTrace *trace,
                           double window_fraction,
                           double *alpha,
                           double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KVWAVE_H */
