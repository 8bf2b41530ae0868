#ifndef SQUASHING_H
#define SQUASHING_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  SQ_STATUS_NUMERICAL = 3,
  SQ_STATUS_PANIC = 4,
} SqStatus;

// Opaque linear map, stored by its Choi matrix.
typedef struct SqMap SqMap;

// Opaque density matrix.
typedef struct SqState SqState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sq_version(void);

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *sq_last_error_message(void);

// Density matrix from a row-major matrix on subsystems `dims[0..n_dims]`.
//
// # Safety
// `dims` must point to `n_dims` values; `re` (and `im`, unless null) to
// `D*D` values where `D` is the product of `dims`.
enum SqStatus sq_state_new(const uintptr_t *dims,
                           uintptr_t n_dims,
                           const double *re,
                           const double *im,
                           struct SqState **out);

// Two-qubit Werner state `(1-p)|ψ+><ψ+| + p I/4`.
//
// # Safety
// `out` must be a valid pointer.
enum SqStatus sq_state_werner(double p, struct SqState **out);

// Total dimension, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
uintptr_t sq_state_dim(const struct SqState *state);

// # Safety
// `state` must be null or a handle not yet freed.
void sq_state_free(struct SqState *state);

// # Safety
// `out` must be a valid pointer.
enum SqStatus sq_map_identity(uintptr_t d, struct SqMap **out);

// # Safety
// `out` must be a valid pointer.
enum SqStatus sq_map_transpose(uintptr_t d, struct SqMap **out);

// `ρ ↦ (1-p)ρ + p tr(ρ) I/d`.
//
// # Safety
// `out` must be a valid pointer.
enum SqStatus sq_map_depolarizing(uintptr_t d, double p, struct SqMap **out);

// Map from its Choi matrix `Σ|i><j| ⊗ Λ(|i><j|)`, row-major, input first.
//
// # Safety
// `re` (and `im`, unless null) must point to `(din*dout)^2` values.
enum SqStatus sq_map_from_choi(uintptr_t din,
                               uintptr_t dout,
                               const double *re,
                               const double *im,
                               struct SqMap **out);

// # Safety
// `map` must be null or a handle not yet freed.
void sq_map_free(struct SqMap *map);

// Certified upper bound on the diamond norm.
//
// # Safety
// `map` must be a live handle and `out_value` a valid pointer.
enum SqStatus sq_map_diamond_norm(const struct SqMap *map,
                                  uintptr_t restarts,
                                  uint64_t seed,
                                  double *out_value);

// Negativity across the cut after subsystem `cut`.
//
// # Safety
// `state` must be a live handle and `out_value` a valid pointer.
enum SqStatus sq_negativity(const struct SqState *state, uintptr_t cut, double *out_value);

// Smallest eigenvalue of the partial transpose on subsystem `cut`.
//
// # Safety
// `state` must be a live handle and `out_value` a valid pointer.
enum SqStatus sq_ppt_min_eigenvalue(const struct SqState *state, uintptr_t cut, double *out_value);

// Largest certified lower bound on the negativity of `state` obtainable
// from the output of `map_a ⊗ map_b`. `*out_available` is false when no
// certified norm could be computed.
//
// # Safety
// Handles must be live; output pointers valid.
enum SqStatus sq_negativity_bound(const struct SqState *state,
                                  const struct SqMap *map_a,
                                  const struct SqMap *map_b,
                                  uintptr_t restarts,
                                  uint64_t seed,
                                  double *out_value,
                                  bool *out_available);

// Runs a TOML scenario and returns the JSON report in `*out_json`, to be
// released with [`sq_string_free`]. `command` labels the report; null means
// `"run"`.
//
// # Safety
// `config` and `command` (unless null) must be NUL-terminated strings.
enum SqStatus sq_run_scenario(const char *config, const char *command, char **out_json);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void sq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQUASHING_H */
