#ifndef MONOHEAT_H
#define MONOHEAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The first four match the command-line exit codes.
 */
typedef enum MhStatus {
  MH_STATUS_OK = 0,
  MH_STATUS_NON_CONVERGENCE = 1,
  MH_STATUS_VIOLATION = 2,
  MH_STATUS_CONFIG_ERROR = 3,
  MH_STATUS_INVALID_ARGUMENT = 4,
  MH_STATUS_GRAPH_ERROR = 5,
  MH_STATUS_PANIC = 6,
} MhStatus;

/**
 * A monotone graph.
 */
typedef struct MhGraph MhGraph;

/**
 * A completed transient solve.
 */
typedef struct MhSolution MhSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * call into this library on the same thread.
 */
const char *mh_last_error(void);

/**
 * Library version as a static string.
 */
const char *mh_version(void);

/**
 * Parses a graph expression such as `physical(h=1, s=1)` into `*out`.
 *
 * # Safety
 * `expr` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MhStatus mh_graph_parse(const char *expr, struct MhGraph **out);

/**
 * # Safety
 * `graph` must come from [`mh_graph_parse`] and not be used afterwards. Null is ignored.
 */
void mh_graph_free(struct MhGraph *graph);

/**
 * Minimal section at `r`.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum MhStatus mh_graph_value(const struct MhGraph *graph, double r, double *out);

/**
 * Resolvent `(I + λA)⁻¹x`.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum MhStatus mh_graph_resolvent(const struct MhGraph *graph, double lambda, double x, double *out);

/**
 * Yosida approximation `A_λ x`.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum MhStatus mh_graph_yosida(const struct MhGraph *graph, double lambda, double x, double *out);

/**
 * Convex potential with value 0 at 0.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum MhStatus mh_graph_potential(const struct MhGraph *graph, double r, double *out);

/**
 * Moreau envelope of the potential.
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum MhStatus mh_graph_moreau_envelope(const struct MhGraph *graph,
                                       double lambda,
                                       double x,
                                       double *out);

/**
 * Runs a configuration as the command-line tool would, writing into `out_dir`.
 * `command` may be null when the file has a `command = ...` line.
 *
 * # Safety
 * String arguments must be NUL-terminated; `command` may be null.
 */
enum MhStatus mh_run(const char *config_text, const char *command, const char *out_dir);

/**
 * Solves the `[problem]` of a configuration at the smallest λ of its schedule.
 *
 * # Safety
 * `config_text` must be NUL-terminated and `out` a valid pointer.
 */
enum MhStatus mh_solve(const char *config_text, struct MhSolution **out);

/**
 * # Safety
 * `solution` must come from [`mh_solve`] and not be used afterwards. Null is ignored.
 */
void mh_solution_free(struct MhSolution *solution);

/**
 * Number of time levels, including the initial one. 0 for null.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t mh_solution_levels(const struct MhSolution *solution);

/**
 * Number of mesh nodes. 0 for null.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t mh_solution_node_count(const struct MhSolution *solution);

/**
 * Time of level `k`.
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum MhStatus mh_solution_time(const struct MhSolution *solution, size_t k, double *out);

/**
 * Copies the nodal `u` of level `k` into `buf`, which must hold `len` values
 * with `len` equal to [`mh_solution_node_count`].
 *
 * # Safety
 * `solution` must be a live handle and `buf` valid for `len` writes.
 */
enum MhStatus mh_solution_copy_u(const struct MhSolution *solution,
                                 size_t k,
                                 double *buf,
                                 size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOHEAT_H */
