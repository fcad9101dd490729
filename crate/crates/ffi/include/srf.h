#ifndef SRF_H
#define SRF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SrfStatus {
  SRF_STATUS_OK = 0,
  SRF_STATUS_NULL_POINTER = 1,
  SRF_STATUS_INVALID_UTF8 = 2,
  SRF_STATUS_CONFIG = 3,
  SRF_STATUS_PARSE = 4,
  SRF_STATUS_LATE_FRAME = 5,
  SRF_STATUS_EMPTY = 6,
  SRF_STATUS_ZERO_VARIANCE = 7,
  SRF_STATUS_LENGTH_MISMATCH = 8,
  SRF_STATUS_INVALID_ARGUMENT = 9,
  SRF_STATUS_PANIC = 10,
} SrfStatus;

/**
 * Opaque fusion engine with a wire-format parser and a queue of emitted
 * samples.
 */
typedef struct SrfEngine SrfEngine;

/**
 * One emitted reward tick.
 */
typedef struct SrfRewardSample {
  uint64_t tick_time_ms;
  double r_total;
  double r_fer;
  double r_ser;
  double r_presence;
  double presence_fraction;
  bool has_fer;
  bool has_ser;
} SrfRewardSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *srf_last_error_message(void);

/**
 * Creates an engine from TOML configuration text. `epoch_ms` is used as the
 * first tick time when `has_epoch` is true; otherwise the first frame sets it.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SrfStatus srf_engine_new(const char *config_toml,
                              bool has_epoch,
                              uint64_t epoch_ms,
                              struct SrfEngine **out);

/**
 * Releases an engine. NULL is ignored.
 *
 * # Safety
 * `engine` must come from `srf_engine_new` and not be used afterwards.
 */
void srf_engine_free(struct SrfEngine *engine);

/**
 * Parses one wire-format line and feeds it to the engine. Ticks it closes
 * are queued for `srf_engine_pop_sample`. A rejected line leaves the engine
 * unchanged.
 *
 * # Safety
 * `engine` must be a live handle and `line` a NUL-terminated string.
 */
enum SrfStatus srf_engine_push_line(struct SrfEngine *engine, const char *line);

/**
 * Emits every tick at or before `now_ms`.
 *
 * # Safety
 * `engine` must be a live handle.
 */
enum SrfStatus srf_engine_tick(struct SrfEngine *engine, uint64_t now_ms);

/**
 * Ends the stream: emits ticks up to the last frame, or every tick before
 * `until_ms` when `has_until` is true.
 *
 * # Safety
 * `engine` must be a live handle.
 */
enum SrfStatus srf_engine_finish(struct SrfEngine *engine, bool has_until, uint64_t until_ms);

/**
 * Number of queued samples.
 *
 * # Safety
 * `engine` must be a live handle or NULL.
 */
size_t srf_engine_pending(const struct SrfEngine *engine);

/**
 * Moves the oldest queued sample into `out`. Returns `Empty` when none.
 *
 * # Safety
 * `engine` must be a live handle and `out` a valid pointer.
 */
enum SrfStatus srf_engine_pop_sample(struct SrfEngine *engine, struct SrfRewardSample *out);

/**
 * L2-normalizes a non-negative score vector of length `len` into `out`.
 *
 * # Safety
 * `values` and `out` must point to `len` doubles.
 */
enum SrfStatus srf_normalize_unit(const double *values, size_t len, double *out);

/**
 * Pearson correlation of two arrays of length `len`.
 *
 * # Safety
 * `x` and `y` must point to `len` doubles, `out` to one double.
 */
enum SrfStatus srf_pearson(const double *x, const double *y, size_t len, double *out);

/**
 * Applies an internalisation function given as `identity` or
 * `soft_equity:<scale>` to `r`.
 *
 * # Safety
 * `function` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SrfStatus srf_internalise(const char *function, double r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRF_H */
