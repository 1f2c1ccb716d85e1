#ifndef VOTSEG_H
#define VOTSEG_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VotsegStatus {
  VOTSEG_STATUS_OK = 0,
  VOTSEG_STATUS_DATA_ERROR = 1,
  VOTSEG_STATUS_CONFIG_ERROR = 2,
  VOTSEG_STATUS_IO_ERROR = 3,
  VOTSEG_STATUS_NULL_POINTER = 4,
  VOTSEG_STATUS_PANIC = 5,
} VotsegStatus;

/**
 * Opaque trained model.
 */
typedef struct VotsegModel VotsegModel;

/**
 * Result of one measurement. `vot_type` is 0 for positive, 1 for
 * negative; boundaries are 1-based frames.
 */
typedef struct VotsegMeasurement {
  double vot_ms;
  int32_t vot_type;
  size_t y1;
  size_t y2;
  double type_prob;
} VotsegMeasurement;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *votseg_version(void);

/**
 * Message for the last failure on this thread. Valid until the next
 * failing call on the same thread; never NULL.
 */
const char *votseg_last_error_message(void);

/**
 * Loads a model file and stores a new handle in `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum VotsegStatus votseg_model_load(const char *path, struct VotsegModel **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` must come from `votseg_model_load` and not be used afterwards.
 */
void votseg_model_free(struct VotsegModel *model);

/**
 * Feature dimension the model expects, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t votseg_model_input_dim(const struct VotsegModel *model);

/**
 * Measures VOT on raw features stored row-major, `n_frames x dim`.
 *
 * # Safety
 * `model` must be a live handle, `frames` must point to
 * `n_frames * dim` doubles and `out` must be writable.
 */
enum VotsegStatus votseg_model_predict(const struct VotsegModel *model,
                                       const double *frames,
                                       size_t n_frames,
                                       size_t dim,
                                       double frame_period_ms,
                                       struct VotsegMeasurement *out);

/**
 * Best segmentation of a `n_frames x 2` row-major score matrix (column 0
 * scores the first boundary, column 1 the second).
 *
 * # Safety
 * `scores` must point to `2 * n_frames` doubles; `y1`, `y2` must be
 * writable.
 */
enum VotsegStatus votseg_decode(const double *scores, size_t n_frames, size_t *y1, size_t *y2);

/**
 * Tolerance-hinged boundary loss between two segmentations.
 */
double votseg_task_loss(size_t gold_y1,
                        size_t gold_y2,
                        size_t pred_y1,
                        size_t pred_y2,
                        size_t tau_frames);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOTSEG_H */
