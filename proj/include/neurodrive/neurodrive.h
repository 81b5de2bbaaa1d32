/* C interface to the neurodrive feature-extraction and evaluation library.
 *
 * Objects are opaque handles released with their *_free function. Every
 * call returning nd_status leaves a message for nd_last_error() on failure;
 * the message is per thread and valid until that thread's next failing call.
 * Strings returned through char** are owned by the caller and released with
 * nd_string_free. */
#ifndef NEURODRIVE_H
#define NEURODRIVE_H

#include <stddef.h>
#include <stdint.h>

#if defined(NEURODRIVE_BUILDING)
#define ND_API __attribute__((visibility("default")))
#else
#define ND_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nd_status {
  ND_OK = 0,
  ND_ERR_CONFIG = 1,   /* bad option, unknown modality, impossible setting */
  ND_ERR_DATA = 2,     /* malformed or unusable input data */
  ND_ERR_IO = 3,       /* missing or unreadable/unwritable file */
  ND_ERR_INTERNAL = 4
} nd_status;

typedef struct nd_dataset nd_dataset;
typedef struct nd_embedder nd_embedder;
typedef struct nd_report nd_report;

ND_API const char* nd_version(void);
ND_API const char* nd_last_error(void);
ND_API void nd_string_free(char* s);

/* Synthetic dataset. config_json keys (all optional): subjects,
 * trials_per_subject, incidents_per_subject, effect, seed, modalities
 * (array of "eeg", "ppg", "gsr", "face"). Writes out_dir/manifest.json. */
ND_API nd_status nd_synth(const char* config_json, const char* out_dir, nd_dataset** out);

ND_API nd_status nd_dataset_open(const char* manifest_path, nd_dataset** out);
ND_API void nd_dataset_free(nd_dataset* ds);
ND_API size_t nd_dataset_subject_count(const nd_dataset* ds);
/* task is "attention" (full trials) or "incident" (2 s clips); unknown -> 0 / NULL. */
ND_API size_t nd_dataset_trial_count(const nd_dataset* ds, const char* task);
ND_API const char* nd_dataset_trial_id(const nd_dataset* ds, const char* task, size_t index);

/* config_json: {"kind": "deterministic_projection", "seed": 42} or
 * {"kind": "external_model", "model_path": "..."}; NULL selects the default. */
ND_API nd_status nd_embedder_create(const char* config_json, nd_embedder** out);
ND_API void nd_embedder_free(nd_embedder* e);
/* rgb: 224*224*3 interleaved bytes; out: 4096 doubles. */
ND_API nd_status nd_embed(const nd_embedder* e, const uint8_t* rgb, int width, int height, double* out);

/* Feature file JSON for one trial and modality (eeg, ppg, gsr, face). */
ND_API nd_status nd_extract(const nd_dataset* ds, const char* trial_id, const char* modality,
                            const nd_embedder* e, int bins, char** features_json);

/* Feature files for every trial carrying the modality's payload, written to
 * out_dir/<modality>/<trial>.json (plus PNGs when render_images is set).
 * Per-trial failures do not stop the batch; they are returned as a JSON
 * array of {"trial", "error"} objects in errors_json and the status is the
 * first failure's. */
ND_API nd_status nd_extract_all(const nd_dataset* ds, const char* modality, const nd_embedder* e, int bins,
                                int render_images, const char* out_dir, char** errors_json);

/* Trend sequences (intervals x 60) for every incident clip, written to
 * out_dir/<modality>/<trial>.trend.json with the fitted reduction in
 * out_dir/<modality>/trend_reduction.json. */
ND_API nd_status nd_extract_trends(const nd_dataset* ds, const char* modality, const nd_embedder* e,
                                   double interval_s, int bins, const char* out_dir);

/* Topographic map and spectrogram PNGs for one trial. Missing payloads are
 * reported in warnings_json (JSON array of strings) without failing. */
ND_API nd_status nd_render(const nd_dataset* ds, const char* trial_id, const char* out_dir, char** warnings_json);

/* Leave-one-subject-out evaluation; config_json follows the eval config file
 * format (task, modalities, classifier, pca_dim, seed, ...). */
ND_API nd_status nd_eval(const nd_dataset* ds, const char* config_json, nd_report** out);
ND_API const char* nd_report_json(const nd_report* r);
ND_API const char* nd_report_table(const nd_report* r);
ND_API void nd_report_free(nd_report* r);

/* Numeric building blocks. */
ND_API nd_status nd_mutual_information(const double* x, const double* y, size_t n, int bins, double* out);
ND_API nd_status nd_conditional_entropy(const double* x, const double* y, size_t n, int bins, double* out);
ND_API nd_status nd_auc(const int* labels, const double* scores, size_t n, double* out);
ND_API nd_status nd_paired_ttest(const double* a, const double* b, size_t n, double* t, double* p);

#ifdef __cplusplus
}
#endif

#endif
