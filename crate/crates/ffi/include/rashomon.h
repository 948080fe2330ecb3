#ifndef RASHOMON_H
#define RASHOMON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum RmStatus {
  RM_STATUS_OK = 0,
  RM_STATUS_NULL_ARGUMENT = 1,
  RM_STATUS_INVALID_UTF8 = 2,
  RM_STATUS_PARSE = 3,
  RM_STATUS_INVALID_ARGUMENT = 4,
  RM_STATUS_SCENARIO = 5,
  RM_STATUS_QUERY = 6,
  RM_STATUS_PANIC = 7,
} RmStatus;

typedef enum RmMode {
  RM_MODE_SELECTION = 0,
  RM_MODE_COMPOSITION_COMPLEMENTARY = 1,
  RM_MODE_COMPOSITION_FILTERED = 2,
  RM_MODE_SURFACING = 3,
} RmMode;

/**
 * An attack graph.
 */
typedef struct RmGraph RmGraph;

/**
 * A loaded scenario and its arbiter.
 */
typedef struct RmSession RmSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from this thread; do not free.
 */
const char *rm_last_error(void);

/**
 * Library version; static storage.
 */
const char *rm_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rm_string_free(char *s);

/**
 * Creates an empty graph.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RmStatus rm_graph_new(struct RmGraph **out);

/**
 * Parses a graph from AF text (`af N`, N argument lines, `att A B` lines).
 *
 * # Safety
 * `af_text` must be a NUL-terminated string; `out` valid for a pointer write.
 */
enum RmStatus rm_graph_parse(const char *af_text, struct RmGraph **out);

/**
 * # Safety
 * `graph` must come from `rm_graph_new`/`rm_graph_parse` and not be freed twice.
 */
void rm_graph_free(struct RmGraph *graph);

/**
 * Declares an argument. Declaration order is the order used in every output.
 *
 * # Safety
 * `graph` must be a live handle and `name` a NUL-terminated string.
 */
enum RmStatus rm_graph_add_argument(struct RmGraph *graph, const char *name);

/**
 * Adds an attack between two declared arguments.
 *
 * # Safety
 * `graph` must be a live handle; both names NUL-terminated strings.
 */
enum RmStatus rm_graph_add_attack(struct RmGraph *graph, const char *attacker, const char *target);

/**
 * The grounded extension as a JSON array of names.
 *
 * # Safety
 * `graph` must be a live handle; `out` valid for a pointer write.
 */
enum RmStatus rm_graph_grounded(const struct RmGraph *graph, char **out);

/**
 * Every preferred extension as a JSON array of arrays of names.
 *
 * # Safety
 * `graph` must be a live handle; `out` valid for a pointer write.
 */
enum RmStatus rm_graph_preferred(const struct RmGraph *graph, char **out);

/**
 * The retrieval mode implied by the grounded extension. Fails on an empty graph.
 *
 * # Safety
 * `graph` must be a live handle; `out` valid for a write.
 */
enum RmStatus rm_graph_classify(const struct RmGraph *graph, enum RmMode *out);

/**
 * The graph in AF text.
 *
 * # Safety
 * `graph` must be a live handle; `out` valid for a pointer write.
 */
enum RmStatus rm_graph_serialize(const struct RmGraph *graph, char **out);

/**
 * The graph in DOT, grounded members highlighted. `name` may be null.
 *
 * # Safety
 * `graph` must be a live handle; `name` null or NUL-terminated; `out` valid for a pointer write.
 */
enum RmStatus rm_graph_dot(const struct RmGraph *graph, const char *name, char **out);

/**
 * Loads a scenario file and stages its observations. With `logical_clock`
 * non-zero, time is deterministic.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` valid for a pointer write.
 */
enum RmStatus rm_session_open(const char *path, bool logical_clock, struct RmSession **out);

/**
 * # Safety
 * `session` must come from `rm_session_open` and not be freed twice.
 */
void rm_session_free(struct RmSession *session);

/**
 * Runs the encoding cycle over pending observations; writes the report as JSON.
 *
 * # Safety
 * `session` must be a live handle; `out` valid for a pointer write.
 */
enum RmStatus rm_session_encode(struct RmSession *session, char **out);

/**
 * Runs one of the scenario's queries by id; writes the outcome as JSON.
 *
 * # Safety
 * `session` must be a live handle; `query_id` NUL-terminated; `out` valid for a pointer write.
 */
enum RmStatus rm_session_query(struct RmSession *session, const char *query_id, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RASHOMON_H */
