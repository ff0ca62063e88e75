#ifndef FAIRGRAPH_H
#define FAIRGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of a fallible call.
 */
typedef enum FgStatus {
  FG_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8, or malformed JSON argument.
   */
  FG_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Parameter or dataset rejected.
   */
  FG_STATUS_CONFIG = 2,
  /**
   * Fairness could not be met and strict mode was requested.
   */
  FG_STATUS_INFEASIBLE = 3,
  /**
   * Numerical failure (zero degree, eigensolver, PSD check).
   */
  FG_STATUS_NUMERIC = 4,
  FG_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  FG_STATUS_PANIC = 6,
} FgStatus;

typedef enum FgMethod {
  FG_METHOD_KNN = 0,
  FG_METHOD_EPS = 1,
  FG_METHOD_FAIR_KNN = 2,
  FG_METHOD_FAIR_EPS = 3,
} FgMethod;

typedef struct FgClustering FgClustering;

typedef struct FgDataset FgDataset;

typedef struct FgGraph FgGraph;

/**
 * Graph construction options. Obtain defaults from
 * [`fg_graph_options_default`].
 */
typedef struct FgGraphOptions {
  enum FgMethod method;
  /**
   * Neighbors per node; 0 selects `ceil(sqrt(n))`.
   */
  size_t k;
  double alpha;
  size_t min_pts;
  /**
   * Radius for epsilon methods; values <= 0 select the quantile rule.
   */
  double eps;
  /**
   * Use the exact candidate-pool kNN instead of NN-Descent.
   */
  bool exact;
  uint64_t seed;
} FgGraphOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fg_version(void);

/**
 * Message of the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *fg_last_error_message(void);

/**
 * Creates a dataset from `n * d` row-major points and `n` group ids.
 * `truth` may be null.
 *
 * # Safety
 * `points` must hold `n * d` doubles, `groups` and a non-null `truth` must
 * hold `n` values, and `out` must be writable.
 */
enum FgStatus fg_dataset_new(const double *points,
                             size_t n,
                             size_t d,
                             const size_t *groups,
                             const size_t *truth,
                             struct FgDataset **out);

/**
 * Loads the data source named in a run-configuration JSON document
 * (a CSV ingest spec or SBM parameters).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
enum FgStatus fg_dataset_from_config(const char *config_json, struct FgDataset **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t fg_dataset_len(const struct FgDataset *ds);

/**
 * Feature dimension, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t fg_dataset_dim(const struct FgDataset *ds);

/**
 * Copies the `n` group ids into `out`.
 *
 * # Safety
 * `ds` must be a live handle and `out` must hold `len` values.
 */
enum FgStatus fg_dataset_groups(const struct FgDataset *ds, size_t *out, size_t len);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void fg_dataset_free(struct FgDataset *ds);

struct FgGraphOptions fg_graph_options_default(void);

/**
 * Builds a neighbor graph on `ds`. A null `opts` uses the defaults.
 *
 * # Safety
 * `ds` must be a live handle, `opts` null or valid, `out` writable.
 */
enum FgStatus fg_graph_build(const struct FgDataset *ds,
                             const struct FgGraphOptions *opts,
                             struct FgGraph **out);

/**
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t fg_graph_num_nodes(const struct FgGraph *g);

/**
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t fg_graph_num_edges(const struct FgGraph *g);

/**
 * Nodes whose neighborhood could not be made fair.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t fg_graph_infeasible_count(const struct FgGraph *g);

/**
 * Reads undirected edge `index` (`i < j`).
 *
 * # Safety
 * `g` must be a live handle and the output pointers writable.
 */
enum FgStatus fg_graph_edge(const struct FgGraph *g,
                            size_t index,
                            size_t *i,
                            size_t *j,
                            double *weight);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void fg_graph_free(struct FgGraph *g);

/**
 * Spectral clustering of `g` into `c` clusters (0 uses the dataset's
 * ground-truth cluster count). Isolated nodes take the label of their
 * nearest clustered point in `ds`.
 *
 * # Safety
 * `g` and `ds` must be live handles and `out` writable.
 */
enum FgStatus fg_cluster(const struct FgGraph *g,
                         const struct FgDataset *ds,
                         size_t c,
                         uint64_t seed,
                         struct FgClustering **out);

/**
 * Runs the whole pipeline for a run-configuration JSON document. When
 * `report_json` is non-null it receives the evaluation report, to be
 * released with [`fg_string_free`].
 *
 * # Safety
 * `config_json` must be NUL-terminated, `out` writable, `report_json` null
 * or writable.
 */
enum FgStatus fg_pipeline_run(const char *config_json,
                              struct FgClustering **out,
                              char **report_json);

/**
 * # Safety
 * `cl` must be null or a live clustering handle.
 */
size_t fg_clustering_len(const struct FgClustering *cl);

/**
 * Copies the labels into `out`; `len` must equal [`fg_clustering_len`].
 *
 * # Safety
 * `cl` must be a live handle and `out` must hold `len` values.
 */
enum FgStatus fg_clustering_labels(const struct FgClustering *cl, size_t *out, size_t len);

/**
 * # Safety
 * `cl` must be null or a handle not yet freed.
 */
void fg_clustering_free(struct FgClustering *cl);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void fg_string_free(char *s);

/**
 * Balance (min over clusters of smallest/largest group count).
 *
 * # Safety
 * `labels` and `groups` must hold `n` values; `out` must be writable.
 */
enum FgStatus fg_balance(const size_t *labels, const size_t *groups, size_t n, double *out);

/**
 * Clustering error under the best one-to-one label matching.
 *
 * # Safety
 * `labels` and `truth` must hold `n` values; `out` must be writable.
 */
enum FgStatus fg_clustering_error(const size_t *labels, const size_t *truth, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRGRAPH_H */
