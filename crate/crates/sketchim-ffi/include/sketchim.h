#ifndef SKETCHIM_H
#define SKETCHIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum SketchimStatus {
  SketchimStatus_Ok = 0,
  SketchimStatus_NullArgument = 1,
  SketchimStatus_Validation = 2,
  SketchimStatus_Io = 3,
  SketchimStatus_Parse = 4,
  SketchimStatus_Panic = 5,
} SketchimStatus;

/**
 * Opaque graph handle.
 */
typedef struct SketchimGraph SketchimGraph;

/**
 * Opaque seed-selection result handle.
 */
typedef struct SketchimResult SketchimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the current thread's most recent error. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sketchim_last_error_message(void);

/**
 * Loads an edge-list file into a graph handle.
 *
 * `weights` uses the same syntax as the CLI: "const:<w>", "wc", or "raw".
 * On success `*out` owns the graph; release it with [`sketchim_graph_free`].
 *
 * # Safety
 * `path` and `weights` must be valid NUL-terminated strings and `out` a
 * valid pointer.
 */
enum SketchimStatus sketchim_graph_load(const char *path,
                                        bool directed,
                                        const char *weights,
                                        struct SketchimGraph **out);

/**
 * Releases a graph handle. Passing NULL is a no-op.
 *
 * # Safety
 * `graph` must come from [`sketchim_graph_load`] and not be used afterwards.
 */
void sketchim_graph_free(struct SketchimGraph *graph);

/**
 * Number of vertices, 0 for NULL.
 *
 * # Safety
 * `graph` must be a live handle or NULL.
 */
uint64_t sketchim_graph_vertex_count(const struct SketchimGraph *graph);

/**
 * Number of directed edges, 0 for NULL.
 *
 * # Safety
 * `graph` must be a live handle or NULL.
 */
uint64_t sketchim_graph_edge_count(const struct SketchimGraph *graph);

/**
 * Runs sketch-based seed selection. Negative epsilon values select the
 * defaults (0.3, 0.01, 0.02). On success `*out` owns the result; release
 * it with [`sketchim_result_free`].
 *
 * # Safety
 * `graph` must be a live handle and `out` a valid pointer.
 */
enum SketchimStatus sketchim_select(const struct SketchimGraph *graph,
                                    uint64_t k,
                                    uint64_t registers_per_vertex,
                                    double eps_l,
                                    double eps_g,
                                    double eps_c,
                                    uint64_t master_seed,
                                    bool relaxed,
                                    struct SketchimResult **out);

/**
 * Releases a result handle. Passing NULL is a no-op.
 *
 * # Safety
 * `result` must come from [`sketchim_select`] and not be used afterwards.
 */
void sketchim_result_free(struct SketchimResult *result);

/**
 * Number of selected seeds, 0 for NULL.
 *
 * # Safety
 * `result` must be a live handle or NULL.
 */
uint64_t sketchim_result_seed_count(const struct SketchimResult *result);

/**
 * Seed at `index` in selection order, as the input file's vertex ID.
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum SketchimStatus sketchim_result_seed(const struct SketchimResult *result,
                                         uint64_t index,
                                         uint64_t *out);

/**
 * Mean per-simulation reach of the final seed set, 0 for NULL.
 *
 * # Safety
 * `result` must be a live handle or NULL.
 */
double sketchim_result_sigma_final(const struct SketchimResult *result);

/**
 * Number of sketch rebuilds during selection, 0 for NULL.
 *
 * # Safety
 * `result` must be a live handle or NULL.
 */
uint64_t sketchim_result_rebuild_count(const struct SketchimResult *result);

/**
 * Serializes the result (original-ID seeds, per-step log, sigma) to a JSON
 * string owned by the caller; free it with [`sketchim_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum SketchimStatus sketchim_result_to_json(const struct SketchimResult *result, char **out);

/**
 * Releases a string returned by this library. Passing NULL is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sketchim_string_free(char *s);

/**
 * Scores a seed set with the independent Monte-Carlo oracle. `seeds` holds
 * `seed_count` vertex IDs as used in the input file.
 *
 * # Safety
 * `graph` must be a live handle, `seeds` must point to `seed_count` IDs,
 * and the two out-pointers must be valid.
 */
enum SketchimStatus sketchim_oracle_influence(const struct SketchimGraph *graph,
                                              const uint64_t *seeds,
                                              uint64_t seed_count,
                                              uint32_t rounds,
                                              uint64_t rng_seed,
                                              double *out_mean,
                                              double *out_stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKETCHIM_H */
