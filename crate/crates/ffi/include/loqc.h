#ifndef LOQC_H
#define LOQC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum LoqcStatus {
  LOQC_STATUS_OK = 0,
  LOQC_STATUS_NULL_POINTER = 1,
  LOQC_STATUS_INVALID_ARGUMENT = 2,
  LOQC_STATUS_DIMENSION_MISMATCH = 3,
  LOQC_STATUS_CAPACITY_EXCEEDED = 4,
  LOQC_STATUS_ZERO_GATE_MAP = 5,
  LOQC_STATUS_UNKNOWN_TARGET = 6,
  LOQC_STATUS_NUMERICAL = 7,
  LOQC_STATUS_PARSE = 8,
  LOQC_STATUS_IO = 9,
  LOQC_STATUS_PANIC = 10,
} LoqcStatus;

// Opaque beamsplitter/phase-shifter factorization.
typedef struct LoqcDecomposition LoqcDecomposition;

// Opaque post-selected gate map.
typedef struct LoqcGateMap LoqcGateMap;

// Opaque square complex mode matrix.
typedef struct LoqcModeMatrix LoqcModeMatrix;

// Optimizer knobs; start from `loqc_optimizer_settings_default`.
typedef struct LoqcOptimizerSettings {
  double epsilon;
  size_t n_restarts;
  size_t max_iterations;
  double gradient_step;
  double convergence_tol;
  uint64_t rng_seed;
  // `false` for the Knill ansatz, `true` for a full unitary.
  bool full_unitary;
} LoqcOptimizerSettings;

// Summary of an optimized device.
typedef struct LoqcPoint {
  double epsilon;
  double delta;
  double success;
  double objective;
  bool converged;
  size_t iterations;
} LoqcPoint;

// One beamsplitter `T(i, j)`, `i > j`, 1-based modes.
typedef struct LoqcRotation {
  size_t i;
  size_t j;
  double omega;
  double phi;
} LoqcRotation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until
// the next failing call on the same thread.
const char *loqc_last_error(void);

// Static description of a status code.
const char *loqc_status_name(enum LoqcStatus status);

// Builds an `n x n` matrix from `2 n^2` interleaved doubles.
//
// # Safety
// `re_im` must point to `2 n^2` doubles and `out_matrix` must be writable.
enum LoqcStatus loqc_mode_matrix_new(size_t n,
                                     const double *re_im,
                                     struct LoqcModeMatrix **out_matrix);

// # Safety
// `out_matrix` must be writable.
enum LoqcStatus loqc_mode_matrix_identity(size_t n, struct LoqcModeMatrix **out_matrix);

// # Safety
// `m` must come from this library and not be used afterwards. NULL is a
// no-op.
void loqc_mode_matrix_free(struct LoqcModeMatrix *m);

// Number of modes, or 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t loqc_mode_matrix_n_modes(const struct LoqcModeMatrix *m);

// Copies the entries into `buf` (`2 n^2` doubles).
//
// # Safety
// `m` must be live; `buf` must hold `len` doubles.
enum LoqcStatus loqc_mode_matrix_entries(const struct LoqcModeMatrix *m, double *buf, size_t len);

// `max |U†U - I|`.
//
// # Safety
// `m` must be live; `error` writable.
enum LoqcStatus loqc_mode_matrix_unitarity_error(const struct LoqcModeMatrix *m, double *error);

// `<output| U |input>` for photon-number vectors of length `n_modes`.
//
// # Safety
// `input` and `output` must hold `n_modes` values; `re`, `im` writable.
enum LoqcStatus loqc_transition_amplitude(const struct LoqcModeMatrix *m,
                                          const uint32_t *input,
                                          const uint32_t *output,
                                          size_t n_modes,
                                          double *re,
                                          double *im);

// Post-selected gate map of `u` in the standard dual-rail layout: qubits
// on the first modes, `n_ancilla` ancilla modes last.
//
// # Safety
// `ancilla_in` and `pattern` must hold `n_ancilla` values.
enum LoqcStatus loqc_gate_map_extract(const struct LoqcModeMatrix *u,
                                      const uint32_t *ancilla_in,
                                      const uint32_t *pattern,
                                      size_t n_ancilla,
                                      struct LoqcGateMap **out_map);

// # Safety
// `map` must come from this library and not be used afterwards.
void loqc_gate_map_free(struct LoqcGateMap *map);

// Side `2^q` of the logical block, or 0 for NULL.
//
// # Safety
// `map` must be NULL or live.
size_t loqc_gate_map_dimension(const struct LoqcGateMap *map);

// Copies the logical block into `buf` (`2 d^2` doubles).
//
// # Safety
// `map` must be live; `buf` must hold `len` doubles.
enum LoqcStatus loqc_gate_map_entries(const struct LoqcGateMap *map, double *buf, size_t len);

// Fidelity against a built-in target (`"cz"`, `"cnot"`, `"cs:0.5"`, ...).
//
// # Safety
// `map` live, `target` a NUL-terminated string, `fidelity` writable.
enum LoqcStatus loqc_fidelity(const struct LoqcGateMap *map, const char *target, double *fidelity);

// Success probability of `map` produced by `u` with `n_photons` photons.
//
// # Safety
// `map` and `u` live, `success` writable.
enum LoqcStatus loqc_success(const struct LoqcGateMap *map,
                             const struct LoqcModeMatrix *u,
                             uint32_t n_photons,
                             double *success);

struct LoqcOptimizerSettings loqc_optimizer_settings_default(void);

// Best CZ device (two qubits, ancillas `(1,1)` heralded on `(1,1)`, rails
// 1 and 3 passive for the Knill ansatz). `out_u` may be NULL.
//
// # Safety
// `settings` live, `point` writable, `out_u` NULL or writable.
enum LoqcStatus loqc_maximize_cz(const struct LoqcOptimizerSettings *settings,
                                 struct LoqcPoint *point,
                                 struct LoqcModeMatrix **out_u);

// # Safety
// `u` live, `out_decomposition` writable.
enum LoqcStatus loqc_decompose(const struct LoqcModeMatrix *u,
                               struct LoqcDecomposition **out_decomposition);

// # Safety
// `d` must come from this library and not be used afterwards.
void loqc_decomposition_free(struct LoqcDecomposition *d);

// # Safety
// `d` NULL or live.
size_t loqc_decomposition_n_modes(const struct LoqcDecomposition *d);

// # Safety
// `d` NULL or live.
size_t loqc_decomposition_rotation_count(const struct LoqcDecomposition *d);

// Rotation `index` in physical order.
//
// # Safety
// `d` live, `rotation` writable.
enum LoqcStatus loqc_decomposition_rotation(const struct LoqcDecomposition *d,
                                            size_t index,
                                            struct LoqcRotation *rotation);

// Copies the `n_modes` output phases.
//
// # Safety
// `d` live; `phases` must hold `len` doubles.
enum LoqcStatus loqc_decomposition_output_phases(const struct LoqcDecomposition *d,
                                                 double *phases,
                                                 size_t len);

// # Safety
// `d` live, `out_matrix` writable.
enum LoqcStatus loqc_decomposition_reconstruct(const struct LoqcDecomposition *d,
                                               struct LoqcModeMatrix **out_matrix);

// Circuit JSON; release with `loqc_string_free`.
//
// # Safety
// `d` live, `json` writable.
enum LoqcStatus loqc_decomposition_to_json(const struct LoqcDecomposition *d, char **json);

// Parses circuit JSON.
//
// # Safety
// `json` NUL-terminated, `out_decomposition` writable.
enum LoqcStatus loqc_decomposition_from_json(const char *json,
                                             struct LoqcDecomposition **out_decomposition);

// # Safety
// `s` must come from this library. NULL is a no-op.
void loqc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOQC_H */
