#ifndef FIBERSCOPE_H
#define FIBERSCOPE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_ARGUMENT = 1,
  FS_STATUS_INVALID_UTF8 = 2,
  FS_STATUS_SCAN_FAILED = 3,
  FS_STATUS_LOAD_FAILED = 4,
  FS_STATUS_PARSE_FAILED = 5,
  FS_STATUS_STATS_FAILED = 6,
  FS_STATUS_BAD_K = 7,
  FS_STATUS_UNKNOWN_AXIS = 8,
  FS_STATUS_UNKNOWN_SUBJECT = 9,
  FS_STATUS_UNKNOWN_CLUSTER = 10,
  FS_STATUS_NO_CLUSTERS = 11,
  FS_STATUS_PROJECTION_FAILED = 12,
  FS_STATUS_OUT_OF_RANGE = 13,
  FS_STATUS_INVALID_RANGE = 14,
  FS_STATUS_BUFFER_TOO_SMALL = 15,
  FS_STATUS_PANIC = 16,
} FsStatus;

/**
 * A scanned cohort with lazily loaded clusters.
 */
typedef struct FsEngine FsEngine;

/**
 * Parsed geometry of one cluster file.
 */
typedef struct FsGeometry FsGeometry;

/**
 * A 2D projection layout.
 */
typedef struct FsLayout FsLayout;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *fs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fs_version(void);

/**
 * Scans the cohort under `root` with the default file pattern.
 *
 * # Safety
 * `root` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FsStatus fs_engine_open(const char *root, struct FsEngine **out);

/**
 * # Safety
 * `engine` must come from [`fs_engine_open`] and not be used afterwards.
 */
void fs_engine_free(struct FsEngine *engine);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FsStatus fs_engine_subject_count(const struct FsEngine *engine, size_t *out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FsStatus fs_engine_cluster_count(const struct FsEngine *engine, size_t *out);

/**
 * Projects every cluster of the cohort. `axes_csv` may be null for all
 * fields. `k < 0` selects the default pivot count; `k = 0` is `BadK`.
 *
 * # Safety
 * `engine` and `out` must be valid; `axes_csv` null or NUL-terminated.
 */
enum FsStatus fs_engine_project(const struct FsEngine *engine,
                                const char *axes_csv,
                                int64_t k,
                                uint64_t seed,
                                struct FsLayout **out);

/**
 * # Safety
 * `layout` must come from [`fs_engine_project`] and not be used afterwards.
 */
void fs_layout_free(struct FsLayout *layout);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FsStatus fs_layout_len(const struct FsLayout *layout, size_t *out);

/**
 * Position, cluster id and pivot flag of point `index`. Any out pointer
 * may be null.
 *
 * # Safety
 * `layout` must be valid; non-null out pointers must be writable.
 */
enum FsStatus fs_layout_point(const struct FsLayout *layout,
                              size_t index,
                              double *x,
                              double *y,
                              uint32_t *cluster_id,
                              bool *is_pivot);

/**
 * Copies the subject id of point `index` into `buf` with a trailing NUL.
 * `needed` receives the required size including the NUL; a short buffer
 * yields `BufferTooSmall`.
 *
 * # Safety
 * `layout` and `needed` must be valid; `buf` writable for `buf_len` bytes
 * or null when `buf_len` is 0.
 */
enum FsStatus fs_layout_subject(const struct FsLayout *layout,
                                size_t index,
                                char *buf,
                                size_t buf_len,
                                size_t *needed);

/**
 * Parses an in-memory `.trk` file.
 *
 * # Safety
 * `bytes` must be readable for `len` bytes; `out` must be valid.
 */
enum FsStatus fs_trk_parse(const uint8_t *bytes, size_t len, struct FsGeometry **out);

/**
 * Parses an in-memory `.vtp` file.
 *
 * # Safety
 * `bytes` must be readable for `len` bytes; `out` must be valid.
 */
enum FsStatus fs_vtp_parse(const uint8_t *bytes, size_t len, struct FsGeometry **out);

/**
 * # Safety
 * `geometry` must come from a parse function and not be used afterwards.
 */
void fs_geometry_free(struct FsGeometry *geometry);

/**
 * # Safety
 * Pointers must be valid.
 */
enum FsStatus fs_geometry_counts(const struct FsGeometry *geometry, size_t *fibers, size_t *points);

/**
 * Copies fiber `index` as `x, y, z` triples into `xyz` (capacity `cap`
 * doubles). `n_points` always receives the fiber's vertex count.
 *
 * # Safety
 * `geometry` and `n_points` must be valid; `xyz` writable for `cap`
 * doubles or null when `cap` is 0.
 */
enum FsStatus fs_geometry_fiber(const struct FsGeometry *geometry,
                                size_t index,
                                double *xyz,
                                size_t cap,
                                size_t *n_points);

/**
 * Min-max scaling of `x` into [0, 1]; a degenerate range gives 0.5.
 *
 * # Safety
 * `out` must be valid.
 */
enum FsStatus fs_minmax_normalize(double x, double min, double max, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIBERSCOPE_H */
