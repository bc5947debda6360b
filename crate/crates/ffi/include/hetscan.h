#ifndef HETSCAN_H
#define HETSCAN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_ARGUMENT = 2,
  HS_STATUS_INPUT_ERROR = 3,
  HS_STATUS_DEGENERATE = 4,
  HS_STATUS_PANIC = 5,
} HsStatus;

typedef enum HsDirection {
  HS_DIRECTION_VERTICAL = 0,
  HS_DIRECTION_HORIZONTAL = 1,
} HsDirection;

/**
 * Pipeline configuration.
 */
typedef struct HsConfig HsConfig;

/**
 * Grayscale image.
 */
typedef struct HsImage HsImage;

/**
 * Analysis result for one image.
 */
typedef struct HsReport HsReport;

/**
 * Mismatch metrics and verdict of a report.
 */
typedef struct HsMetrics {
  double delta_hurst;
  double delta_width;
  double energy_l1;
  bool heterogeneous;
} HsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hs_version(void);

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *hs_last_error_message(void);

/**
 * Parses a binary or ASCII PGM image from memory.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum HsStatus hs_image_from_pgm(const uint8_t *data, size_t len, struct HsImage **out);

/**
 * Builds an image from row-major samples.
 *
 * # Safety
 * `pixels` must point to `rows * cols` readable values; `out` must be
 * writable.
 */
enum HsStatus hs_image_from_pixels(size_t rows,
                                   size_t cols,
                                   uint16_t max_value,
                                   const uint16_t *pixels,
                                   struct HsImage **out);

/**
 * # Safety
 * `image` must be a live handle; `rows` and `cols` must be writable.
 */
enum HsStatus hs_image_dims(const struct HsImage *image, size_t *rows, size_t *cols);

/**
 * # Safety
 * `image` must be null or a handle not yet freed.
 */
void hs_image_free(struct HsImage *image);

/**
 * Default configuration.
 */
struct HsConfig *hs_config_new(void);

/**
 * Parses a configuration from JSON in the format written to reports.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HsStatus hs_config_from_json(const char *json, struct HsConfig **out);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum HsStatus hs_config_set_thresholds(struct HsConfig *config,
                                       double hurst,
                                       double width,
                                       double energy);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum HsStatus hs_config_set_raw(struct HsConfig *config, bool raw);

/**
 * Sets the wavelet by name (`haar`, `db2`, `db4`) and level count.
 *
 * # Safety
 * `config` must be a live handle; `name` a NUL-terminated string.
 */
enum HsStatus hs_config_set_wavelet(struct HsConfig *config, const char *name, size_t levels);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void hs_config_free(struct HsConfig *config);

/**
 * Runs the full pipeline. A null `config` means the defaults.
 *
 * # Safety
 * `image` must be a live handle, `config` null or a live handle, and
 * `out` writable.
 */
enum HsStatus hs_analyze(const struct HsImage *image,
                         const struct HsConfig *config,
                         struct HsReport **out);

/**
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
enum HsStatus hs_report_metrics(const struct HsReport *report, struct HsMetrics *out);

/**
 * Copies the generalized Hurst exponents of one direction into `q` and
 * `h`. `len` receives the number of entries; if `capacity` is too small
 * nothing is copied and `HS_STATUS_INVALID_ARGUMENT` is returned, so a
 * call with `capacity = 0` queries the size.
 *
 * # Safety
 * `report` must be a live handle; `q` and `h` must have room for
 * `capacity` values; `len` must be writable.
 */
enum HsStatus hs_report_hurst(const struct HsReport *report,
                              enum HsDirection direction,
                              double *q,
                              double *h,
                              size_t capacity,
                              size_t *len);

/**
 * The report as JSON. Release the string with [`hs_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
enum HsStatus hs_report_to_json(const struct HsReport *report, char **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void hs_report_free(struct HsReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void hs_string_free(char *s);

/**
 * Generalized Hurst exponent `h(q)` of a series with the default MFDFA
 * configuration for its length.
 *
 * # Safety
 * `values` must point to `len` readable values; `out` must be writable.
 */
enum HsStatus hs_mfdfa_hurst(const double *values, size_t len, double q, double *out);

/**
 * Fills `out` with `len` samples of unit-variance fractional Gaussian
 * noise. `len` must be a power of two of at least 256.
 *
 * # Safety
 * `out` must have room for `len` values.
 */
enum HsStatus hs_gen_fgn(double hurst, size_t len, uint64_t seed, double *out);

/**
 * Series of one unfolding of an image: `len` receives `rows * cols`;
 * values are copied only when `capacity` suffices.
 *
 * # Safety
 * `image` must be a live handle; `out` must have room for `capacity`
 * values; `len` must be writable.
 */
enum HsStatus hs_image_unfold(const struct HsImage *image,
                              enum HsDirection direction,
                              double *out,
                              size_t capacity,
                              size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HETSCAN_H */
