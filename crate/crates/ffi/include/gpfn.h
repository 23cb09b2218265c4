#ifndef GPFN_H
#define GPFN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GpfnStatus {
  GPFN_STATUS_OK = 0,
  GPFN_STATUS_NULL_POINTER = 1,
  GPFN_STATUS_INVALID_ARGUMENT = 2,
  GPFN_STATUS_IO = 3,
  GPFN_STATUS_CONFIG = 4,
  GPFN_STATUS_GENERATION = 5,
  GPFN_STATUS_FORMAT = 6,
  GPFN_STATUS_EPISODE = 7,
  GPFN_STATUS_PANIC = 8,
} GpfnStatus;

/**
 * Prior configuration handle.
 */
typedef struct GpfnConfig GpfnConfig;

/**
 * Dataset handle, with any episodes built for it.
 */
typedef struct GpfnDataset GpfnDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *gpfn_version(void);

/**
 * Message of the last failed call on this thread (empty after a success).
 * Valid until the next gpfn call on the same thread.
 */
const char *gpfn_last_error(void);

/**
 * Default prior configuration.
 */
struct GpfnConfig *gpfn_config_default(void);

/**
 * Loads a TOML config file; absent keys take their defaults.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum GpfnStatus gpfn_config_load(const char *path, struct GpfnConfig **out);

/**
 * Parses a TOML config document.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum GpfnStatus gpfn_config_parse(const char *text, struct GpfnConfig **out);

/**
 * # Safety
 * `config` must come from this library and not be freed twice. Null is ignored.
 */
void gpfn_config_free(struct GpfnConfig *config);

/**
 * Generates the dataset identified by `(config, seed)`.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum GpfnStatus gpfn_generate(const struct GpfnConfig *config,
                              uint64_t seed,
                              struct GpfnDataset **out);

/**
 * Replaces the dataset's episodes with `count` freshly built ones.
 *
 * # Safety
 * `dataset` must be a live handle.
 */
enum GpfnStatus gpfn_dataset_build_episodes(struct GpfnDataset *dataset, uint16_t count);

/**
 * Reads and validates a `.gpfn` container.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum GpfnStatus gpfn_dataset_read(const char *path, struct GpfnDataset **out);

/**
 * Writes the dataset and its episodes as a `.gpfn` container.
 *
 * # Safety
 * `dataset` must be a live handle and `path` a nul-terminated string.
 */
enum GpfnStatus gpfn_dataset_write(const struct GpfnDataset *dataset, const char *path);

/**
 * # Safety
 * `dataset` must come from this library and not be freed twice. Null is ignored.
 */
void gpfn_dataset_free(struct GpfnDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
uint64_t gpfn_dataset_seed(const struct GpfnDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
uint64_t gpfn_dataset_n_nodes(const struct GpfnDataset *dataset);

/**
 * Number of stored arcs, twice the undirected edge count.
 *
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
uint64_t gpfn_dataset_n_arcs(const struct GpfnDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
uint32_t gpfn_dataset_n_features(const struct GpfnDataset *dataset);

/**
 * Class count, or 0 for regression datasets.
 *
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
uint16_t gpfn_dataset_n_classes(const struct GpfnDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
uint16_t gpfn_dataset_episode_count(const struct GpfnDataset *dataset);

/**
 * CSR offsets, `n_nodes + 1` entries.
 *
 * # Safety
 * `dataset` must be a live handle; `len` may be null.
 */
const uint64_t *gpfn_dataset_offsets(const struct GpfnDataset *dataset, size_t *len);

/**
 * CSR neighbor indices, ascending within each node.
 *
 * # Safety
 * `dataset` must be a live handle; `len` may be null.
 */
const uint32_t *gpfn_dataset_indices(const struct GpfnDataset *dataset, size_t *len);

/**
 * Row-major `n_nodes x n_features` feature matrix.
 *
 * # Safety
 * `dataset` must be a live handle; `len` may be null.
 */
const float *gpfn_dataset_features(const struct GpfnDataset *dataset, size_t *len);

/**
 * Regression targets, or null for classification datasets.
 *
 * # Safety
 * `dataset` must be a live handle; `len` may be null.
 */
const float *gpfn_dataset_regression_targets(const struct GpfnDataset *dataset, size_t *len);

/**
 * Class ids, or null for regression datasets.
 *
 * # Safety
 * `dataset` must be a live handle; `len` may be null.
 */
const uint16_t *gpfn_dataset_class_targets(const struct GpfnDataset *dataset, size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPFN_H */
