#ifndef OLT_H
#define OLT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible entry point.
typedef enum OltStatus {
  OLT_STATUS_OK = 0,
  // A required pointer argument was null.
  OLT_STATUS_NULL_POINTER = 1,
  // Malformed UTF-8, JSON or configuration.
  OLT_STATUS_INVALID_ARGUMENT = 2,
  // Wrong dimension, out-of-range action or non-finite input.
  OLT_STATUS_CONTRACT_VIOLATION = 3,
  OLT_STATUS_UNSUPPORTED_DOMAIN = 4,
  // The optimizer aborted or its surrogate became ill-conditioned.
  OLT_STATUS_OPTIMIZER_FAILED = 5,
  OLT_STATUS_IO = 6,
  // An output buffer is shorter than required.
  OLT_STATUS_BUFFER_TOO_SMALL = 7,
  // Internal panic, caught at the boundary.
  OLT_STATUS_PANIC = 8,
} OltStatus;

// Opaque generative model handle.
typedef struct OltModel OltModel;

// Opaque evaluation spec handle.
typedef struct OltSpec OltSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a model from a domain object such as `{"key": "chain_walk", "states": 7}`.
//
// # Safety
// `domain_json` must be a NUL-terminated string and `model_out` a writable pointer.
enum OltStatus olt_model_new(const char *domain_json, struct OltModel **model_out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from [`olt_model_new`] and not be used afterwards.
void olt_model_free(struct OltModel *model);

// State dimension, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t olt_model_state_dimension(const struct OltModel *model);

// Number of discrete actions, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t olt_model_action_count(const struct OltModel *model);

// Length of θ for this model, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t olt_model_feature_dimension(const struct OltModel *model);

// Discount factor, or NaN for a null handle.
//
// # Safety
// `model` must be null or a live handle.
double olt_model_discount(const struct OltModel *model);

// One simulator step. `next_state` must hold `state_len` values.
//
// # Safety
// Pointers must be valid for the given lengths; outputs must be writable.
enum OltStatus olt_model_step(const struct OltModel *model,
                              const double *state,
                              size_t state_len,
                              size_t action,
                              double *next_state,
                              double *reward);

// Draws `count` initial states from `seed` into `buffer`, row-major.
//
// # Safety
// `buffer` must be writable for `buffer_len` values.
enum OltStatus olt_model_initial_states(const struct OltModel *model,
                                        size_t count,
                                        uint64_t seed,
                                        double *buffer,
                                        size_t buffer_len);

// First action of the best-first look-ahead tree scored by θ.
//
// # Safety
// Pointers must be valid for the given lengths; `action_out` must be writable.
enum OltStatus olt_act(const struct OltModel *model,
                       const double *state,
                       size_t state_len,
                       const double *theta,
                       size_t theta_len,
                       size_t budget,
                       size_t *action_out);

// Like [`olt_act`] with a built-in scorer: `uniform`, `greedy` or `optimistic`.
//
// # Safety
// `preset` must be a NUL-terminated string; other pointers as in [`olt_act`].
enum OltStatus olt_act_preset(const struct OltModel *model,
                              const double *state,
                              size_t state_len,
                              const char *preset,
                              size_t budget,
                              size_t *action_out);

// Creates an evaluation spec from its JSON form.
//
// # Safety
// `spec_json` must be a NUL-terminated string and `spec_out` a writable pointer.
enum OltStatus olt_spec_new(const char *spec_json, struct OltSpec **spec_out);

// Releases a spec. Null is ignored.
//
// # Safety
// `spec` must come from [`olt_spec_new`] and not be used afterwards.
void olt_spec_free(struct OltSpec *spec);

// Mean discounted return `J(θ)` over the spec's training states.
//
// # Safety
// `theta` must be valid for `theta_len` values; `value_out` must be writable.
enum OltStatus olt_spec_objective(const struct OltSpec *spec,
                                  const double *theta,
                                  size_t theta_len,
                                  double *value_out);

// Runs a full optimize-and-evaluate campaign from an experiment config.
//
// `seed` and `output` in the config are honoured except that nothing is
// written to disk. The campaign result is returned as JSON in `result_out`,
// to be released with [`olt_string_free`].
//
// # Safety
// `config_json` must be a NUL-terminated string and `result_out` a writable pointer.
enum OltStatus olt_run_experiment(const char *config_json, size_t workers, char **result_out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void olt_string_free(char *s);

// Message for the last failed call on this thread, empty after a success.
// Valid until the next call into the library on the same thread.
const char *olt_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *olt_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OLT_H */
