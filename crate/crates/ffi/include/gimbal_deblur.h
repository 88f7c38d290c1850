#ifndef GIMBAL_DEBLUR_H
#define GIMBAL_DEBLUR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GdMethod {
  GD_METHOD_WIENER = 0,
  GD_METHOD_RICHARDSON_LUCY = 1,
  GD_METHOD_HYPER_LAPLACIAN = 2,
} GdMethod;

typedef enum GdStatus {
  GD_STATUS_OK = 0,
  GD_STATUS_NULL_POINTER = 1,
  GD_STATUS_INVALID_ARGUMENT = 2,
  GD_STATUS_DIMENSION_MISMATCH = 3,
  GD_STATUS_IO = 4,
  GD_STATUS_FORMAT = 5,
  GD_STATUS_LUT_MISS = 6,
  GD_STATUS_ILL_POSED = 7,
  GD_STATUS_PANIC = 8,
} GdStatus;

/**
 * Grayscale image with samples in [0, 1].
 */
typedef struct GdImage GdImage;

/**
 * Normalized blur kernel.
 */
typedef struct GdKernel GdKernel;

/**
 * Steering-rate PSF lookup table.
 */
typedef struct GdLut GdLut;

/**
 * Parameters of [`gd_deblur`]; only the fields of the chosen method are read.
 */
typedef struct GdDeblurParams {
  enum GdMethod method;
  double nsr;
  uint32_t rl_iterations;
  double lambda;
  double p;
  /**
   * Non-zero enables edge tapering.
   */
  int32_t edge_taper;
} GdDeblurParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gd_version(void);

/**
 * Copies `width * height` row-major samples into a new image.
 *
 * # Safety
 * `data` must point to `width * height` readable doubles and `out` must be
 * a valid pointer.
 */
enum GdStatus gd_image_new(size_t width, size_t height, const double *data, struct GdImage **out);

/**
 * Loads a PGM or PNG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GdStatus gd_image_load(const char *path, struct GdImage **out);

/**
 * Saves as 16-bit PGM, or PNG when the path ends in `.png`.
 *
 * # Safety
 * `image` must be a live handle and `path` a NUL-terminated string.
 */
enum GdStatus gd_image_save(const struct GdImage *image, const char *path);

/**
 * Writes the image size; either output may be NULL.
 *
 * # Safety
 * `image` must be a live handle.
 */
enum GdStatus gd_image_dims(const struct GdImage *image, size_t *width, size_t *height);

/**
 * Copies the samples into `dst`, which must hold `len >= width * height`
 * doubles.
 *
 * # Safety
 * `image` must be a live handle and `dst` must point to `len` writable
 * doubles.
 */
enum GdStatus gd_image_read(const struct GdImage *image, double *dst, size_t len);

/**
 * # Safety
 * `image` must be NULL or a handle not freed before.
 */
void gd_image_free(struct GdImage *image);

/**
 * Yaw-motion PSF at the image center for a camera given by its diagonal
 * field of view and frame size.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GdStatus gd_kernel_analytic(double fov_deg,
                                 size_t width,
                                 size_t height,
                                 double steering_rate_deg_s,
                                 double exposure_s,
                                 double frame_rate,
                                 struct GdKernel **out);

/**
 * Loads a kernel text file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GdStatus gd_kernel_load(const char *path, struct GdKernel **out);

/**
 * Estimates a `kernel_size` x `kernel_size` kernel from a blurred image
 * and its sharp counterpart.
 *
 * # Safety
 * Both images must be live handles and `out` a valid pointer.
 */
enum GdStatus gd_kernel_estimate(const struct GdImage *blurred,
                                 const struct GdImage *sharp,
                                 size_t kernel_size,
                                 struct GdKernel **out);

/**
 * Writes the kernel size; either output may be NULL.
 *
 * # Safety
 * `kernel` must be a live handle.
 */
enum GdStatus gd_kernel_dims(const struct GdKernel *kernel, size_t *width, size_t *height);

/**
 * Copies the row-major weights into `dst` (`len >= width * height`).
 *
 * # Safety
 * `kernel` must be a live handle and `dst` must point to `len` writable
 * doubles.
 */
enum GdStatus gd_kernel_read(const struct GdKernel *kernel, double *dst, size_t len);

/**
 * # Safety
 * `kernel` must be NULL or a handle not freed before.
 */
void gd_kernel_free(struct GdKernel *kernel);

/**
 * Opens a LUT directory written by the `build-lut` command.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GdStatus gd_lut_load(const char *dir, struct GdLut **out);

/**
 * Copies the kernel stored for a steering rate into a new handle.
 * Returns `GD_STATUS_LUT_MISS` when the rate is not stored.
 *
 * # Safety
 * `lut` must be a live handle and `out` a valid pointer.
 */
enum GdStatus gd_lut_get(const struct GdLut *lut,
                         double steering_rate_deg_s,
                         struct GdKernel **out);

/**
 * # Safety
 * `lut` must be NULL or a handle not freed before.
 */
void gd_lut_free(struct GdLut *lut);

/**
 * Library defaults for `method`, with edge tapering enabled.
 */
struct GdDeblurParams gd_deblur_params_default(enum GdMethod method);

/**
 * Deblurs `blurred` with `kernel`. `params` may be NULL for the Wiener
 * defaults.
 *
 * # Safety
 * `blurred` and `kernel` must be live handles, `params` NULL or valid, and
 * `out` a valid pointer.
 */
enum GdStatus gd_deblur(const struct GdImage *blurred,
                        const struct GdKernel *kernel,
                        const struct GdDeblurParams *params,
                        struct GdImage **out);

/**
 * PSNR in dB for a dynamic range of 1; +infinity for identical images.
 *
 * # Safety
 * Both images must be live handles and `out` a valid pointer.
 */
enum GdStatus gd_psnr(const struct GdImage *x, const struct GdImage *reference, double *out);

/**
 * Mean SSIM with an 11x11 Gaussian window (sigma 1.5).
 *
 * # Safety
 * Both images must be live handles and `out` a valid pointer.
 */
enum GdStatus gd_ssim(const struct GdImage *x, const struct GdImage *reference, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIMBAL_DEBLUR_H */
