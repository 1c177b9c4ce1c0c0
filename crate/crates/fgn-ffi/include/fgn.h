/* C interface for the fgn lifelong graph learning library. */

#ifndef FGN_H
#define FGN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FGN_OK 0

#define FGN_ERR_INVALID_ARGUMENT 1

#define FGN_ERR_FORMAT 2

#define FGN_ERR_NUMERICAL 3

#define FGN_ERR_POINTER 4

#define FGN_ERR_INTERNAL 5

/**
 * Opaque handle to a loaded, immutable attribute graph.
 */
typedef struct FgnGraph FgnGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or NULL when the previous call
 * succeeded. The pointer stays valid until the next API call on the thread.
 */
const char *fgn_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be a string returned by this library, or NULL.
 */
void fgn_string_free(char *s);

/**
 * Loads a classic content/cites dataset.
 *
 * # Safety
 * `content_path` and `cites_path` must be valid NUL-terminated strings and
 * `out_graph` a valid pointer.
 */
int fgn_graph_load_classic(const char *content_path,
                           const char *cites_path,
                           struct FgnGraph **out_graph);

/**
 * Loads a canonical JSON-lines dataset.
 *
 * # Safety
 * `nodes_path` and `edges_path` must be valid NUL-terminated strings and
 * `out_graph` a valid pointer.
 */
int fgn_graph_load_canonical(const char *nodes_path,
                             const char *edges_path,
                             struct FgnGraph **out_graph);

/**
 * Releases a graph handle.
 *
 * # Safety
 * `graph` must be a handle returned by a load function, or NULL.
 */
void fgn_graph_free(struct FgnGraph *graph);

/**
 * Node count, or -1 if the handle is NULL.
 *
 * # Safety
 * `graph` must be a valid handle or NULL.
 */
int64_t fgn_graph_num_nodes(const struct FgnGraph *graph);

/**
 * Feature dimension F, or -1 if the handle is NULL.
 *
 * # Safety
 * `graph` must be a valid handle or NULL.
 */
int64_t fgn_graph_feature_dim(const struct FgnGraph *graph);

/**
 * Class count, or -1 if the handle is NULL.
 *
 * # Safety
 * `graph` must be a valid handle or NULL.
 */
int64_t fgn_graph_class_count(const struct FgnGraph *graph);

/**
 * Lifelong training over the continuum described by `config_json` (an
 * experiment-config object; omitted fields take their defaults). On success
 * writes the metrics JSON document to `out_json`.
 *
 * # Safety
 * `graph` must be a valid handle; `config_json` a valid NUL-terminated
 * string; `out_json` a valid pointer.
 */
int fgn_train_lifelong(const struct FgnGraph *graph, const char *config_json, char **out_json);

/**
 * Offline (upper bound) training; otherwise as `fgn_train_lifelong`.
 *
 * # Safety
 * Same contract as `fgn_train_lifelong`.
 */
int fgn_train_offline(const struct FgnGraph *graph, const char *config_json, char **out_json);

/**
 * Lifelong training across `sizes` memory capacities with paired seeds;
 * writes one metrics document per size as a JSON array.
 *
 * # Safety
 * `graph` must be a valid handle; `config_json` a valid NUL-terminated
 * string; `sizes` must point to `sizes_len` readable entries; `out_json`
 * must be a valid pointer.
 */
int fgn_sweep_memory(const struct FgnGraph *graph,
                     const char *config_json,
                     const uint64_t *sizes,
                     size_t sizes_len,
                     char **out_json);

/**
 * Evaluates a saved parameter checkpoint on the test split that a run with
 * this config and `seed` would use. Writes `{"accuracy", "per_class_accuracy"}`.
 *
 * # Safety
 * `graph` must be a valid handle; `checkpoint_path` and `config_json` valid
 * NUL-terminated strings; `out_json` a valid pointer.
 */
int fgn_evaluate_checkpoint(const struct FgnGraph *graph,
                            const char *checkpoint_path,
                            const char *config_json,
                            uint64_t seed,
                            char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FGN_H */
