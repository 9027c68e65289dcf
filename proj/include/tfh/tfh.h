#ifndef TFH_TFH_H
#define TFH_TFH_H

#include <stddef.h>
#include <stdint.h>

#if defined(TFH_BUILDING_LIBRARY)
#define TFH_API __attribute__((visibility("default")))
#else
#define TFH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* ---------------------------------------------------------------------------
 * Status codes and errors
 *
 * Every fallible call returns a tfh_status. On failure the calling thread's
 * last error is set; tfh_last_error_message() and tfh_last_error_json() stay
 * valid until the next failing call on the same thread. Output handles are
 * left untouched on failure.
 * ------------------------------------------------------------------------- */

typedef enum tfh_status {
  TFH_OK = 0,
  TFH_ERR_SHAPE = 1,
  TFH_ERR_CAPACITY = 2,
  TFH_ERR_PARSE = 3,
  TFH_ERR_CONFIG = 4,
  TFH_ERR_NUMERIC = 5,
  TFH_ERR_IO = 6,
  TFH_ERR_STATE = 7,
  TFH_ERR_INVALID_ARGUMENT = 8,
  TFH_ERR_INTERNAL = 9
} tfh_status;

/* Short snake_case name, e.g. "shape_error". */
TFH_API const char* tfh_status_name(tfh_status status);
TFH_API const char* tfh_last_error_message(void);
/* {"status": name, "message": text, ...} plus "offset" for parse errors,
 * "path" for I/O errors and "problems" (array) for config errors. */
TFH_API const char* tfh_last_error_json(void);
TFH_API const char* tfh_version(void);

typedef enum tfh_log_level { TFH_LOG_INFO = 0, TFH_LOG_WARNING = 1 } tfh_log_level;
typedef void (*tfh_log_fn)(tfh_log_level level, const char* message, void* user);
/* NULL restores the default stderr sink; calls are serialized. */
TFH_API void tfh_set_log_callback(tfh_log_fn fn, void* user);
TFH_API void tfh_silence_log(void);

/* ---------------------------------------------------------------------------
 * Opaque handles
 * ------------------------------------------------------------------------- */

typedef struct tfh_feature_set tfh_feature_set;
typedef struct tfh_backbone tfh_backbone;
typedef struct tfh_hallucinator tfh_hallucinator;
typedef struct tfh_report tfh_report;

/* ---------------------------------------------------------------------------
 * Labeled feature sets (also used for image sets, shape c x H x W)
 * ------------------------------------------------------------------------- */

typedef struct tfh_synthetic_spec {
  size_t num_classes;
  size_t examples_per_class;
  size_t shape[3];
  uint64_t center_seed;
  float noise_std;
  int clip_to_unit;
  float center_offset;
  size_t center_rank;
  float channel_share;
} tfh_synthetic_spec;

typedef struct tfh_image_spec {
  size_t num_classes;
  size_t examples_per_class;
  size_t shape[3];
  uint64_t template_seed;
  float noise_std;
} tfh_image_spec;

TFH_API void tfh_synthetic_spec_default(tfh_synthetic_spec* spec);
TFH_API void tfh_image_spec_default(tfh_image_spec* spec);

TFH_API tfh_status tfh_features_synthetic(const tfh_synthetic_spec* spec, tfh_feature_set** out);
TFH_API tfh_status tfh_images_synthetic(const tfh_image_spec* spec, tfh_feature_set** out);
TFH_API tfh_status tfh_features_load(const char* path, tfh_feature_set** out);
/* Atomic: the destination is either the complete new file or untouched. */
TFH_API tfh_status tfh_features_save(const tfh_feature_set* set, const char* path);
/* Examples of `classes`, relabelled 0..count-1 in list order. */
TFH_API tfh_status tfh_features_subset(const tfh_feature_set* set, const size_t* classes, size_t count,
                                       tfh_feature_set** out);
TFH_API tfh_status tfh_features_normalize(const tfh_feature_set* set, tfh_feature_set** out);
TFH_API tfh_status tfh_features_info(const tfh_feature_set* set, size_t* num_examples, size_t* num_classes,
                                     size_t shape[3]);
/* Copies example `index` (d*h*w floats, row-major) into `values`. */
TFH_API tfh_status tfh_features_get(const tfh_feature_set* set, size_t index, float* values, size_t capacity,
                                    size_t* label);
TFH_API void tfh_features_free(tfh_feature_set* set);

/* Random disjoint split; each output array receives its group sorted. */
TFH_API tfh_status tfh_split_classes(size_t num_classes, size_t n_base, size_t n_val, size_t n_novel,
                                     uint64_t seed, size_t* base_out, size_t* val_out, size_t* novel_out);

/* ---------------------------------------------------------------------------
 * Backbone
 * ------------------------------------------------------------------------- */

typedef struct tfh_backbone_config {
  size_t image_shape[3];
  size_t widths[3];
  size_t feature_shape[3];
  size_t num_classes;
} tfh_backbone_config;

typedef struct tfh_train_config {
  size_t epochs;
  size_t batch_size;
  float learning_rate;
  float momentum;
  float weight_decay;
  float augment_noise_std;
  float grad_clip_norm; /* 0 disables clipping */
} tfh_train_config;

typedef struct tfh_distill_config {
  float alpha;
  float beta;
  float temperature;
  int init_from_teacher;
  tfh_train_config train;
} tfh_distill_config;

TFH_API void tfh_backbone_config_default(tfh_backbone_config* cfg);
TFH_API void tfh_train_config_default(tfh_train_config* cfg);
TFH_API void tfh_distill_config_default(tfh_distill_config* cfg);

/* `final_accuracy` (nullable) receives the training-set accuracy. */
TFH_API tfh_status tfh_backbone_train(const tfh_feature_set* images, const tfh_backbone_config* cfg,
                                      const tfh_train_config* train, uint64_t seed, tfh_backbone** out,
                                      double* final_accuracy);
TFH_API tfh_status tfh_backbone_distill(const tfh_backbone* teacher, const tfh_feature_set* images,
                                        const tfh_distill_config* cfg, uint64_t seed, tfh_backbone** out,
                                        double* final_accuracy);
TFH_API tfh_status tfh_backbone_extract(const tfh_backbone* model, const tfh_feature_set* images,
                                        unsigned threads, tfh_feature_set** out);
TFH_API tfh_status tfh_backbone_accuracy(const tfh_backbone* model, const tfh_feature_set* images,
                                         double* accuracy);
TFH_API tfh_status tfh_backbone_get_config(const tfh_backbone* model, tfh_backbone_config* cfg);
TFH_API tfh_status tfh_backbone_save(const tfh_backbone* model, const char* path);
TFH_API tfh_status tfh_backbone_load(const char* path, tfh_backbone** out);
TFH_API void tfh_backbone_free(tfh_backbone* model);

/* ---------------------------------------------------------------------------
 * Hallucinator
 * ------------------------------------------------------------------------- */

typedef enum tfh_variant { TFH_VARIANT_TENSOR = 0, TFH_VARIANT_VECTOR = 1 } tfh_variant;

/* Width fields left at 0 take their defaults (see the README). */
typedef struct tfh_hallucinator_config {
  tfh_variant variant;
  size_t feature_shape[3];
  size_t cond_dim;
  size_t latent_dim;
  size_t generator_layers;
  int final_sigmoid;
  size_t conditioner_width;
  size_t conditioner_bottleneck;
  size_t generator_width;
  size_t vector_hidden;
} tfh_hallucinator_config;

typedef struct tfh_meta_train_config {
  size_t n_way;
  size_t k_shot;
  size_t generated_per_class;
  size_t episodes_per_epoch;
  size_t epochs;
  float learning_rate;
  float beta1;
  float beta2;
  float epsilon;
  size_t lr_decay_every;
  float lr_decay_factor;
} tfh_meta_train_config;

typedef struct tfh_fine_tune_config {
  size_t steps;
  float learning_rate;
  size_t generated_per_step;
} tfh_fine_tune_config;

/* Presets: "desk", "large", "small_backbone", "vector" (vector uses the
 * desk feature shape; adjust feature_shape afterwards if needed). */
TFH_API tfh_status tfh_hallucinator_config_preset(const char* name, tfh_hallucinator_config* cfg);
TFH_API void tfh_meta_train_config_default(tfh_meta_train_config* cfg);
TFH_API void tfh_fine_tune_config_default(tfh_fine_tune_config* cfg);
TFH_API tfh_status tfh_hallucinator_config_validate(const tfh_hallucinator_config* cfg);

TFH_API tfh_status tfh_hallucinator_create(const tfh_hallucinator_config* cfg, uint64_t init_seed,
                                           tfh_hallucinator** out);
/* Trains a fresh model. `epoch_losses` (nullable) receives cfg->epochs values. */
TFH_API tfh_status tfh_hallucinator_meta_train(const tfh_feature_set* base, const tfh_hallucinator_config* cfg,
                                               const tfh_meta_train_config* train, uint64_t seed,
                                               tfh_hallucinator** out, double* epoch_losses);
/* Continues training `model` in place. */
TFH_API tfh_status tfh_hallucinator_continue(tfh_hallucinator* model, const tfh_feature_set* base,
                                             const tfh_meta_train_config* train, uint64_t seed,
                                             double* epoch_losses);
/* Fine-tunes a copy of `model` on every class of `support`. */
TFH_API tfh_status tfh_hallucinator_fine_tune(const tfh_hallucinator* model, const tfh_feature_set* support,
                                              const tfh_fine_tune_config* cfg, uint64_t seed,
                                              tfh_hallucinator** out);
/* Reconstruction loss on the class prototypes of `support`, M per class. */
TFH_API tfh_status tfh_hallucinator_support_loss(const tfh_hallucinator* model, const tfh_feature_set* support,
                                                 size_t generated_per_class, uint64_t seed, double* loss);
TFH_API tfh_status tfh_hallucinator_get_config(const tfh_hallucinator* model, tfh_hallucinator_config* cfg);
/* Shape error naming both shapes when the set does not fit the model. */
TFH_API tfh_status tfh_hallucinator_check_features(const tfh_hallucinator* model, const tfh_feature_set* set);
TFH_API tfh_status tfh_hallucinator_save(const tfh_hallucinator* model, const char* path);
TFH_API tfh_status tfh_hallucinator_load(const char* path, tfh_hallucinator** out);
TFH_API void tfh_hallucinator_free(tfh_hallucinator* model);

/* ---------------------------------------------------------------------------
 * Evaluation
 * ------------------------------------------------------------------------- */

typedef enum tfh_classifier {
  TFH_CLASSIFIER_PROTOTYPE = 0,
  TFH_CLASSIFIER_LOGISTIC = 1,
  TFH_CLASSIFIER_SVM = 2
} tfh_classifier;

typedef struct tfh_eval_config {
  tfh_classifier classifier;
  size_t n_way;
  size_t k_shot;
  size_t queries_per_class;
  size_t generated_per_class;
  size_t tasks;
  int fine_tune;
  tfh_fine_tune_config fine_tune_config;
  uint64_t seed;
  unsigned threads;
  double l2;
  size_t max_steps;
  double learning_rate;
  double decay;
  double tolerance;
} tfh_eval_config;

TFH_API void tfh_eval_config_default(tfh_eval_config* cfg);
TFH_API tfh_status tfh_parse_classifier(const char* name, tfh_classifier* out);

/* `model` may be NULL when generated_per_class is 0. */
TFH_API tfh_status tfh_evaluate(const tfh_feature_set* novel, const tfh_hallucinator* model,
                                const tfh_eval_config* cfg, tfh_report** out);
/* One report per entry of `counts`, written to out[0..n-1]. */
TFH_API tfh_status tfh_sweep_generated(const tfh_feature_set* novel, const tfh_hallucinator* model,
                                       const tfh_eval_config* cfg, const size_t* counts, size_t n,
                                       tfh_report** out);
TFH_API tfh_status tfh_cross_domain(const tfh_hallucinator* model, const tfh_feature_set* target,
                                    const tfh_eval_config* cfg, const char* source_name,
                                    const char* target_name, tfh_report** out);
/* CSV of GAP'd support, generated and query features of task `task_index`. */
TFH_API tfh_status tfh_export_features(const tfh_feature_set* novel, const tfh_hallucinator* model,
                                       const tfh_eval_config* cfg, size_t task_index, const char* path,
                                       size_t* rows);

/* Owned by the report; valid until tfh_report_free. */
TFH_API const char* tfh_report_json(const tfh_report* report);
TFH_API const char* tfh_report_fingerprint(const tfh_report* report);
TFH_API const char* tfh_report_csv_row(const tfh_report* report);
TFH_API const char* tfh_report_csv_header(void);
TFH_API double tfh_report_mean(const tfh_report* report);
TFH_API double tfh_report_ci95(const tfh_report* report);
TFH_API size_t tfh_report_task_count(const tfh_report* report);
TFH_API tfh_status tfh_report_from_json(const char* text, tfh_report** out);
TFH_API tfh_status tfh_report_write_json(const tfh_report* report, const char* path);
/* Header plus one row per report, written atomically. */
TFH_API tfh_status tfh_reports_write_csv(const tfh_report* const* reports, size_t n, const char* path);
TFH_API void tfh_report_free(tfh_report* report);

/* ---------------------------------------------------------------------------
 * Validation. Each returns TFH_ERR_CONFIG listing every violated constraint
 * in the error JSON's "problems" array.
 * ------------------------------------------------------------------------- */

TFH_API tfh_status tfh_synthetic_spec_validate(const tfh_synthetic_spec* spec);
TFH_API tfh_status tfh_image_spec_validate(const tfh_image_spec* spec);
TFH_API tfh_status tfh_backbone_config_validate(const tfh_backbone_config* cfg);
TFH_API tfh_status tfh_train_config_validate(const tfh_train_config* cfg);
TFH_API tfh_status tfh_distill_config_validate(const tfh_distill_config* cfg);
TFH_API tfh_status tfh_meta_train_config_validate(const tfh_meta_train_config* cfg);
TFH_API tfh_status tfh_fine_tune_config_validate(const tfh_fine_tune_config* cfg);
TFH_API tfh_status tfh_eval_config_validate(const tfh_eval_config* cfg);

/* Atomic text write shared by the command-line front end. */
TFH_API tfh_status tfh_write_text_file(const char* path, const char* text);

#ifdef __cplusplus
}
#endif

#endif
