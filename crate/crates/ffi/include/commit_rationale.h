#ifndef COMMIT_RATIONALE_H
#define COMMIT_RATIONALE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CR_ABI_VERSION 1

typedef enum CrStatus {
  CR_STATUS_OK = 0,
  CR_STATUS_NULL_ARGUMENT = 1,
  CR_STATUS_INVALID_UTF8 = 2,
  CR_STATUS_PARSE = 3,
  CR_STATUS_LABELS = 4,
  CR_STATUS_GRAPH = 5,
  CR_STATUS_QUERY_SYNTAX = 6,
  CR_STATUS_UNSUPPORTED = 7,
  CR_STATUS_LOOKUP = 8,
  CR_STATUS_DEGENERATE = 9,
  CR_STATUS_INVALID = 10,
  CR_STATUS_PANIC = 11,
} CrStatus;

// An inferred knowledge graph.
typedef struct CrGraph CrGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t cr_abi_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *cr_last_error_message(void);

// Builds and infers a graph from a `git log` dump and a JSONL file of
// sentence labels.
//
// # Safety
// `log` and `labels_jsonl` must be NUL-terminated strings; `out` must be writable.
enum CrStatus cr_graph_from_log(const char *log, const char *labels_jsonl, struct CrGraph **out);

// # Safety
// `g` must come from `cr_graph_from_log` and not be used afterwards. NULL is ignored.
void cr_graph_free(struct CrGraph *g);

// # Safety
// `g` must be a live graph handle; `out` must be writable.
enum CrStatus cr_graph_to_json(const struct CrGraph *g, char **out);

// Commit and sentence rationale report as a JSON array of rows.
//
// # Safety
// `g` must be a live graph handle; `out` must be writable.
enum CrStatus cr_graph_report_json(const struct CrGraph *g, char **out);

// # Safety
// `g` must be a live graph handle; `query` a NUL-terminated string; `out` writable.
enum CrStatus cr_graph_query_json(const struct CrGraph *g, const char *query, char **out);

// # Safety
// `g` must be a live graph handle; `out` must be writable.
enum CrStatus cr_graph_viz_json(const struct CrGraph *g, char **out);

// Fraction of the commit's sentences that carry rationale.
//
// # Safety
// `g` must be a live graph handle; `hash` a NUL-terminated string; `out` writable.
enum CrStatus cr_graph_rationale_density(const struct CrGraph *g, const char *hash, double *out);

// Fleiss' kappa of a row-major `n_items x n_categories` count matrix.
//
// # Safety
// `counts` must point to `n_items * n_categories` values; `out` must be writable.
enum CrStatus cr_fleiss_kappa(const uint32_t *counts,
                              size_t n_items,
                              size_t n_categories,
                              uint32_t n_raters,
                              double *out);

// # Safety
// `s` must be a string returned by this library, or NULL.
void cr_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* COMMIT_RATIONALE_H */
