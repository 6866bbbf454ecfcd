#ifndef PERMLAB_H
#define PERMLAB_H

#include <stddef.h>

// Status codes. The nonzero values of the first four match the exit
// codes of the `permlab` binary.
typedef enum PermlabStatus {
  PERMLAB_STATUS_OK = 0,
  PERMLAB_STATUS_INTERNAL = 1,
  PERMLAB_STATUS_INVALID_CONFIG = 2,
  PERMLAB_STATUS_PRECONDITION = 3,
  PERMLAB_STATUS_CAP_EXCEEDED = 4,
  PERMLAB_STATUS_NULL_ARGUMENT = 5,
  PERMLAB_STATUS_INVALID_UTF8 = 6,
  PERMLAB_STATUS_PANIC = 7,
} PermlabStatus;

// Periodic lattice.
typedef struct PermlabLattice PermlabLattice;

// Outcome of one experiment: its JSON envelope and CSV table.
typedef struct PermlabResult PermlabResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next call into the library on this thread.
const char *permlab_last_error(void);

// Library version as a static string.
const char *permlab_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void permlab_string_free(char *s);

// Creates the periodic cube of dimension `dim` and edge `edge`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum PermlabStatus permlab_lattice_new(size_t dim, size_t edge, struct PermlabLattice **out);

// # Safety
// `lattice` must come from [`permlab_lattice_new`] and not have been freed.
void permlab_lattice_free(struct PermlabLattice *lattice);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `lattice` must be null or a live handle.
size_t permlab_lattice_vertex_count(const struct PermlabLattice *lattice);

// Writes the heat kernel `e^{Δt}` row-major into `buf`, which must hold
// exactly `N * N` doubles.
//
// # Safety
// `lattice` must be a live handle and `buf` must point to `len` writable
// doubles.
enum PermlabStatus permlab_lattice_heat_kernel(const struct PermlabLattice *lattice,
                                               double t,
                                               double *buf,
                                               size_t len);

// Runs the experiment described by a JSON config, with the same keys as
// the `permlab run --config` file. Nothing is written to disk.
//
// # Safety
// `config_json` must be a NUL-terminated string and `out` a valid pointer
// to writable storage for one handle.
enum PermlabStatus permlab_run_json(const char *config_json, struct PermlabResult **out);

// The result envelope as JSON. Free with [`permlab_string_free`].
//
// # Safety
// `result` must be null or a live handle.
char *permlab_result_json(const struct PermlabResult *result);

// The result table as CSV. Free with [`permlab_string_free`].
//
// # Safety
// `result` must be null or a live handle.
char *permlab_result_csv(const struct PermlabResult *result);

// # Safety
// `result` must come from [`permlab_run_json`] and not have been freed.
void permlab_result_free(struct PermlabResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERMLAB_H */
