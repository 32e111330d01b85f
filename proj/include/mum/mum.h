/*
 * mum - Mix image tiles / UnMix feature tiles, with the pseudo-label
 * teacher-student training loop it plugs into.
 *
 * C API over opaque handles. Every function that can fail returns a
 * mum_status; on failure a human-readable message is available from
 * mum_last_error() until the next API call on the same thread. Objects
 * returned through out-parameters are owned by the caller and released with
 * the matching *_destroy / *_free function.
 */

#ifndef MUM_MUM_H
#define MUM_MUM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mum_status {
  MUM_OK = 0,
  MUM_ERR_INVALID_ARGUMENT = 1,
  MUM_ERR_SHAPE = 2,
  MUM_ERR_VALIDATION = 3,
  MUM_ERR_IO = 4,
  MUM_ERR_INTERNAL = 5
} mum_status;

const char* mum_status_name(mum_status status);

/* Message for the most recent failure on this thread ("" if none). */
const char* mum_last_error(void);

void mum_string_free(char* text);
void mum_buffer_free(float* buffer);

/* ---- seeded splittable randomness ------------------------------------- */

typedef struct mum_rng mum_rng;

mum_status mum_rng_create(uint64_t seed, mum_rng** out);
mum_status mum_rng_split(mum_rng* rng, mum_rng** out);
void mum_rng_destroy(mum_rng* rng);

/* ---- mixing masks ------------------------------------------------------ */

typedef struct mum_mask_set mum_mask_set;

/* Independent uniform permutation of group indices at every tile cell. */
mum_status mum_mask_generate(mum_rng* rng, int32_t group_size, int32_t tiles_per_axis,
                             mum_mask_set** out);
mum_status mum_mask_identity(int32_t group_size, int32_t tiles_per_axis, mum_mask_set** out);
mum_status mum_mask_invert(const mum_mask_set* masks, mum_mask_set** out);

/* violations receives the number of offending cells (0 when valid); when
 * report is non-NULL it receives a newline-separated description. */
mum_status mum_mask_validate(const mum_mask_set* masks, int64_t* violations, char** report);

mum_status mum_mask_to_json(const mum_mask_set* masks, char** json);
mum_status mum_mask_from_json(const char* json, mum_mask_set** out);

int32_t mum_mask_group_size(const mum_mask_set* masks);
int32_t mum_mask_tiles_per_axis(const mum_mask_set* masks);
mum_status mum_mask_cell(const mum_mask_set* masks, int32_t grid, int32_t row, int32_t col,
                         int32_t* out);
void mum_mask_destroy(mum_mask_set* masks);

/* ---- tensors (batch, channel, height, width) float32, w fastest -------- */

typedef struct mum_tensor mum_tensor;

mum_status mum_tensor_create(int64_t n, int64_t c, int64_t h, int64_t w, mum_tensor** out);
mum_status mum_tensor_clone(const mum_tensor* tensor, mum_tensor** out);
void mum_tensor_destroy(mum_tensor* tensor);

float* mum_tensor_data(mum_tensor* tensor);
const float* mum_tensor_data_const(const mum_tensor* tensor);
/* axis 0..3 -> n, c, h, w; returns 0 on bad input. */
int64_t mum_tensor_dim(const mum_tensor* tensor, int32_t axis);
int64_t mum_tensor_size(const mum_tensor* tensor);

/* ---- group layouts and the MUM kernels --------------------------------- */

typedef struct mum_layout mum_layout;

/* Consecutive groups of group_size images (trailing remainder allowed),
 * fresh random masks per group. */
mum_status mum_layout_create(mum_rng* rng, int64_t batch, int32_t group_size,
                             int32_t tiles_per_axis, mum_layout** out);
mum_status mum_layout_identity(int64_t batch, int32_t group_size, int32_t tiles_per_axis,
                               mum_layout** out);
/* batch must be a multiple of the mask group size; the set is reused per group. */
mum_status mum_layout_from_masks(const mum_mask_set* masks, int64_t batch, mum_layout** out);
void mum_layout_destroy(mum_layout* layout);

/* Tile permutation kernels. Height and width must be divisible by the
 * layout's tiles_per_axis; unmix works at any spatial stride (feature maps
 * included) and is the exact inverse of mix at equal resolution. */
mum_status mum_mix_tiles(const mum_tensor* batch, const mum_layout* layout, mum_tensor** out);
mum_status mum_unmix_tiles(const mum_tensor* batch, const mum_layout* layout, mum_tensor** out);

/* Overwrites `count` random rectangles per image with `fill`; sides drawn
 * from [frac_lo, frac_hi] as fractions of the image sides. */
mum_status mum_cutout(const mum_tensor* batch, mum_rng* rng, int32_t count, double frac_lo,
                      double frac_hi, float fill, mum_tensor** out);

/* In-place weak (flip) / strong (flip + jitter + cutout) augmentation. */
mum_status mum_weak_augment(mum_tensor* batch, mum_rng* rng);
mum_status mum_strong_augment(mum_tensor* batch, mum_rng* rng);

/* ---- teacher-student --------------------------------------------------- */

/* out[i] = teacher[i] * decay + student[i] * (1 - decay); out may alias
 * either input. */
mum_status mum_ema_update(const float* teacher, const float* student, int64_t length, double decay,
                          float* out);

/* Linear warm-up from d_init at step 0 to d_final at ramp_end_step, clamped
 * afterward. */
mum_status mum_decay_schedule(int64_t step, int64_t ramp_end_step, double d_init, double d_final,
                              double* out);

/* Checkpoints: `path` holds the little-endian float32 parameters and
 * `path + ".json"` the manifest (arch_id, length, step, decay). */
mum_status mum_checkpoint_save(const char* path, const char* arch_id, const float* params,
                               int64_t length, int64_t step, double decay);
mum_status mum_checkpoint_load(const char* path, char** arch_id, float** params, int64_t* length,
                               int64_t* step, double* decay);

/* ---- metrics ------------------------------------------------------------ */

/* Boxes are (x_min, y_min, x_max, y_max). */
mum_status mum_iou(const double box_a[4], const double box_b[4], double* out);

/* Mean number of tiles overlapped with strictly positive area per box;
 * boxes_xyxy holds n_boxes * 4 doubles. */
mum_status mum_compute_no(const double* boxes_xyxy, int64_t n_boxes, double image_w,
                          double image_h, int32_t tiles_per_axis, double* out);

/* AP50 evaluation over JSON documents.
 * preds: [{"image": i, "class": c, "score": s, "box": [x0,y0,x1,y1]}, ...]
 * gts:   [{"image": i, "class": c, "box": [x0,y0,x1,y1]}, ...]
 * result: {"map50": m, "n_images": n, "per_class": [{"class": c, "ap": a,
 * "n_gt": g}, ...]} */
mum_status mum_eval_ap50_json(const char* preds_json, const char* gts_json, char** result_json);

/* ---- synthetic scenes --------------------------------------------------- */

typedef struct mum_dataset mum_dataset;

mum_status mum_dataset_generate(uint64_t seed, int64_t count, int32_t image_size,
                                mum_dataset** out);
int64_t mum_dataset_size(const mum_dataset* dataset);
mum_status mum_dataset_image(const mum_dataset* dataset, int64_t index, mum_tensor** out);
/* Ground truth of one scene: [{"class": c, "box": [x0,y0,x1,y1]}, ...] */
mum_status mum_dataset_labels_json(const mum_dataset* dataset, int64_t index, char** json);
void mum_dataset_destroy(mum_dataset* dataset);

/* ---- training ----------------------------------------------------------- */

typedef struct mum_train_config mum_train_config;

mum_status mum_train_config_create(mum_train_config** out);
mum_status mum_train_config_load(const char* path, mum_train_config** out);
/* Keys match the config-file keys; unknown keys are rejected. */
mum_status mum_train_config_set(mum_train_config* cfg, const char* key, const char* value);
mum_status mum_train_config_to_string(const mum_train_config* cfg, char** text);
void mum_train_config_destroy(mum_train_config* cfg);

typedef struct mum_train_progress {
  int64_t step;
  double loss_s;
  double loss_u;
  double loss_total;
  double delta;
  int64_t n_pseudo;
  int32_t has_eval;
  double ap50_teacher;
  double ap50_student;
  /* Borrowed view of the latest mixed student batch; non-NULL only on
   * snapshot steps (config key snapshot_interval). */
  const mum_tensor* mixed_batch;
} mum_train_progress;

typedef void (*mum_train_callback)(const mum_train_progress* progress, void* user_data);

typedef struct mum_train_result {
  double ap50_teacher;
  double ap50_student;
  double final_loss_s;
  double final_loss_u;
} mum_train_result;

/* Runs the full training loop. When out_dir is non-NULL, writes metrics.csv,
 * config.txt and final student/teacher checkpoints there. callback may be
 * NULL; result may be NULL. */
mum_status mum_train_run(const mum_train_config* cfg, const char* out_dir,
                         mum_train_callback callback, void* user_data, mum_train_result* result);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MUM_MUM_H */
