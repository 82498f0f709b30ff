#ifndef BECV_H
#define BECV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum BecvStatus {
  BECV_STATUS_OK = 0,
  BECV_STATUS_NULL_POINTER = 1,
  BECV_STATUS_INVALID_ARGUMENT = 2,
  BECV_STATUS_INVALID_STATE = 3,
  BECV_STATUS_UNPHYSICAL_SOURCE = 4,
  // The separability program was undecided; widen the tolerance.
  BECV_STATUS_INDETERMINATE = 5,
  BECV_STATUS_SEARCH_EXHAUSTED = 6,
  BECV_STATUS_UNIDENTIFIABLE = 7,
  BECV_STATUS_FORMAT = 8,
  BECV_STATUS_IO = 9,
  // A bug inside the library; the message holds the panic payload.
  BECV_STATUS_PANIC = 10,
} BecvStatus;

// Shipped circuits for [`becv_circuit_preset`].
typedef enum BecvPreset {
  BECV_PRESET_PAPER_CIRCUIT = 0,
  BECV_PRESET_BOUND_STATE = 1,
} BecvPreset;

typedef struct BecvCircuit BecvCircuit;

typedef struct BecvDataset BecvDataset;

typedef struct BecvPartition BecvPartition;

typedef struct BecvReport BecvReport;

typedef struct BecvState BecvState;

// Bootstrap statistics. Significances are NaN when undefined.
typedef struct BecvBootstrapSummary {
  size_t resample_count;
  size_t indeterminate;
  double e_mean;
  double e_std;
  double p_mean;
  double p_std;
  double phys_mean;
  double phys_std;
  double significance_e;
  double significance_p;
  double significance_phys;
} BecvBootstrapSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *becv_last_error(void);

// Library version, statically allocated.
const char *becv_version(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void becv_string_free(char *s);

// Builds a state from a row-major `2n x 2n` covariance matrix (vacuum = I).
//
// # Safety
// `matrix` must point to `len` readable doubles; `out` must be writable.
enum BecvStatus becv_state_new(size_t n_modes,
                               const double *matrix,
                               size_t len,
                               struct BecvState **out);

// Reads a covariance JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum BecvStatus becv_state_read(const char *path, struct BecvState **out);

// # Safety
// `state` must be NULL or a handle from this library, not used afterwards.
void becv_state_free(struct BecvState *state);

// # Safety
// `state` must be a live handle.
size_t becv_state_n_modes(const struct BecvState *state);

// Copies the row-major covariance matrix into `out` (`len >= 4 n^2`).
//
// # Safety
// `state` must be a live handle; `out` must hold `len` doubles.
enum BecvStatus becv_state_matrix(const struct BecvState *state, double *out, size_t len);

// Smallest eigenvalue of `γ + iσ`; negative means unphysical.
//
// # Safety
// `state` must be a live handle; `out` must be writable.
enum BecvStatus becv_physicality_margin(const struct BecvState *state, double *out);

// Ascending symplectic eigenvalues into `out` (`len >= n`).
//
// # Safety
// `state` must be a live handle; `out` must hold `len` doubles.
enum BecvStatus becv_symplectic_eigenvalues(const struct BecvState *state, double *out, size_t len);

// Passes `mode` through a channel of transmission `efficiency`.
//
// # Safety
// `state` must be a live handle; `out` must be writable.
enum BecvStatus becv_apply_loss(const struct BecvState *state,
                                size_t mode,
                                double efficiency,
                                struct BecvState **out);

// Parses a one-based bipartition such as `"1,4|2,3"`.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum BecvStatus becv_partition_parse(const char *spec, size_t n_modes, struct BecvPartition **out);

// # Safety
// `partition` must be NULL or a handle from this library.
void becv_partition_free(struct BecvPartition *partition);

// `P`: smallest eigenvalue of the partially transposed `γ + iσ`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum BecvStatus becv_ppt_measure(const struct BecvState *state,
                                 const struct BecvPartition *partition,
                                 double *out);

// Full certification. `tol <= 0` selects the default tolerance.
//
// # Safety
// Handles must be live; `out` must be writable.
enum BecvStatus becv_certify(const struct BecvState *state,
                             const struct BecvPartition *partition,
                             double tol,
                             int allow_unphysical,
                             struct BecvReport **out);

// # Safety
// `report` must be NULL or a handle from this library.
void becv_report_free(struct BecvReport *report);

// `E`; NaN for a NULL handle.
//
// # Safety
// `report` must be NULL or a live handle.
double becv_report_entanglement(const struct BecvReport *report);

// `P`; NaN for a NULL handle.
//
// # Safety
// `report` must be NULL or a live handle.
double becv_report_ppt_margin(const struct BecvReport *report);

// Physicality margin; NaN for a NULL handle.
//
// # Safety
// `report` must be NULL or a live handle.
double becv_report_physicality(const struct BecvReport *report);

// Classification label such as `"bound-entangled"`, statically allocated;
// NULL for a NULL handle.
//
// # Safety
// `report` must be NULL or a live handle.
const char *becv_report_classification(const struct BecvReport *report);

// The report as JSON; free with [`becv_string_free`].
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum BecvStatus becv_report_to_json(const struct BecvReport *report, char **out);

// # Safety
// `out` must be writable.
enum BecvStatus becv_circuit_preset(enum BecvPreset which, struct BecvCircuit **out);

// Parses a circuit from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum BecvStatus becv_circuit_parse(const char *json, struct BecvCircuit **out);

// # Safety
// `circuit` must be NULL or a handle from this library.
void becv_circuit_free(struct BecvCircuit *circuit);

// Output state of the circuit.
//
// # Safety
// `circuit` must be a live handle; `out` must be writable.
enum BecvStatus becv_circuit_simulate(const struct BecvCircuit *circuit, struct BecvState **out);

// The circuit's partition; `InvalidArgument` if it has none.
//
// # Safety
// `circuit` must be a live handle; `out` must be writable.
enum BecvStatus becv_circuit_partition(const struct BecvCircuit *circuit,
                                       struct BecvPartition **out);

// Samples `count` joint outcomes per setting of the default plan.
//
// # Safety
// `state` must be a live handle; `out` must be writable.
enum BecvStatus becv_dataset_generate(const struct BecvState *state,
                                      size_t count,
                                      uint64_t seed,
                                      struct BecvDataset **out);

// Reads a binary dataset file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum BecvStatus becv_dataset_read(const char *path, struct BecvDataset **out);

// Writes the binary dataset container.
//
// # Safety
// `dataset` must be a live handle; `path` a NUL-terminated string.
enum BecvStatus becv_dataset_write(const struct BecvDataset *dataset, const char *path);

// # Safety
// `dataset` must be NULL or a handle from this library.
void becv_dataset_free(struct BecvDataset *dataset);

// Bootstraps E, P and physicality with resampling per setting.
//
// # Safety
// Handles must be live; `out` must be writable.
enum BecvStatus becv_bootstrap(const struct BecvDataset *dataset,
                               const struct BecvPartition *partition,
                               size_t resamples,
                               uint64_t seed,
                               struct BecvBootstrapSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BECV_H */
