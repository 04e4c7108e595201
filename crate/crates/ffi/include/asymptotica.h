#ifndef ASYMPTOTICA_H
#define ASYMPTOTICA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum AsyStatus {
  ASY_STATUS_OK = 0,
  ASY_STATUS_NULL_POINTER = 1,
  ASY_STATUS_INVALID_INPUT = 2,
  ASY_STATUS_STRUCTURAL = 3,
  ASY_STATUS_NUMERICAL = 4,
  ASY_STATUS_BUFFER_TOO_SMALL = 5,
  ASY_STATUS_PANIC = 6,
} AsyStatus;

/**
 * Picture of a superoperator passed across the boundary.
 */
typedef enum AsyPicture {
  ASY_PICTURE_SCHRODINGER = 0,
  ASY_PICTURE_HEISENBERG = 1,
} AsyPicture;

/**
 * Opaque channel handle.
 */
typedef struct AsyChannel AsyChannel;

/**
 * Opaque analysis report handle.
 */
typedef struct AsyReport AsyReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *asy_version(void);

/**
 * Message of the last failure on this thread.
 *
 * # Safety
 * `buf` must be writable for `cap` bytes; `needed` may be null.
 */
enum AsyStatus asy_last_error(char *buf, size_t cap, size_t *needed);

/**
 * Parse a channel JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid out-pointer.
 */
enum AsyStatus asy_channel_from_json(const char *json, struct AsyChannel **out);

/**
 * Build a channel from a `d² x d²` superoperator given row-major as interleaved `re, im`
 * pairs (`2·d⁴` doubles).
 *
 * # Safety
 * `data` must point to `2·d⁴` readable doubles; `out` must be a valid out-pointer.
 */
enum AsyStatus asy_channel_from_superop(size_t dim,
                                        const double *data,
                                        enum AsyPicture picture,
                                        struct AsyChannel **out);

/**
 * Synthesize a channel from an unfolding spec (JSON).
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be a valid out-pointer.
 */
enum AsyStatus asy_synthesize(const char *spec_json, struct AsyChannel **out);

/**
 * # Safety
 * `c` must be null or a handle from this library, not yet freed.
 */
void asy_channel_free(struct AsyChannel *c);

/**
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum AsyStatus asy_channel_dim(const struct AsyChannel *c, size_t *out);

/**
 * Peripheral eigenvalues (with multiplicity) of the Heisenberg map as interleaved `re, im`
 * pairs. `len` receives the number of eigenvalues; `cap` counts eigenvalues, not doubles.
 *
 * # Safety
 * `c` must be a live handle; `out` must hold `2·cap` doubles; `len` must be writable.
 */
enum AsyStatus asy_peripheral_eigenvalues(const struct AsyChannel *c,
                                          double *out,
                                          size_t cap,
                                          size_t *len);

/**
 * Full analysis with default tolerances and no timings.
 *
 * # Safety
 * `c` must be a live handle; `out` must be a valid out-pointer.
 */
enum AsyStatus asy_analyze(const struct AsyChannel *c, uint64_t seed, struct AsyReport **out);

/**
 * Whether every structural check passed.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum AsyStatus asy_report_passed(const struct AsyReport *r, bool *out);

/**
 * Report attractor dimension (0 if the structure stage did not complete).
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum AsyStatus asy_report_attractor_dim(const struct AsyReport *r, size_t *out);

/**
 * Report as JSON. Call with a null `buf` to learn the size through `needed`.
 *
 * # Safety
 * `r` must be a live handle; `buf` writable for `cap` bytes or null; `needed` may be null.
 */
enum AsyStatus asy_report_json(const struct AsyReport *r, char *buf, size_t cap, size_t *needed);

/**
 * # Safety
 * `r` must be null or a handle from this library, not yet freed.
 */
void asy_report_free(struct AsyReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASYMPTOTICA_H */
