// Copyright 2026 The vadclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VADCLIP_VADCLIP_H_
#define VADCLIP_VADCLIP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VAD_API __declspec(dllexport)
#else
#define VAD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The non-zero values equal the vadctl exit codes. */
typedef enum vad_status {
  VAD_OK = 0,
  VAD_ERR_INTERNAL = 1,
  VAD_ERR_CONFIG = 2,
  VAD_ERR_DATA = 3,
  VAD_ERR_BACKEND = 4
} vad_status;

typedef struct vad_config vad_config;
typedef struct vad_pipeline vad_pipeline;
typedef struct vad_report vad_report;

/* Details of the last failure on the calling thread. Valid until the next
   call on that thread. kind is e.g. "MissingFile"; category is one of
   ConfigError, DataError, BackendError, InternalError. */
VAD_API const char* vad_last_error_message(void);
VAD_API const char* vad_last_error_kind(void);
VAD_API const char* vad_last_error_category(void);

VAD_API const char* vad_version(void);
/* Frees strings returned through char** out-parameters. */
VAD_API void vad_string_free(char* s);

/* Configuration. */
VAD_API vad_status vad_config_create(vad_config** out);
VAD_API vad_status vad_config_load(vad_config* cfg, const char* path);
VAD_API vad_status vad_config_load_text(vad_config* cfg, const char* text);
/* key is "section.key". */
VAD_API vad_status vad_config_set(vad_config* cfg, const char* key, const char* value);
/* Applies VADCTL_<SECTION>_<KEY> variables from envp (NULL-terminated). */
VAD_API vad_status vad_config_apply_env(vad_config* cfg, char** envp);
VAD_API vad_status vad_config_get(const vad_config* cfg, const char* key, char** out);
VAD_API vad_status vad_config_dump(const vad_config* cfg, char** out);
VAD_API vad_status vad_config_hash(const vad_config* cfg, char** out);
VAD_API void vad_config_destroy(vad_config* cfg);

/* Pipeline. Captures a copy of cfg. */
VAD_API vad_status vad_pipeline_open(const vad_config* cfg, vad_pipeline** out);
VAD_API void vad_pipeline_close(vad_pipeline* p);
/* Creates the run directory if needed. */
VAD_API vad_status vad_pipeline_run_dir(vad_pipeline* p, char** out);

typedef struct vad_ingest_stats {
  size_t records;
  size_t persons;
  size_t segments;
  size_t padded;
} vad_ingest_stats;

typedef struct vad_cache_stats {
  size_t segments;
  size_t visual_encoded;
  size_t visual_cached;
  size_t text_encoded;
  size_t text_cached;
  size_t vlm_calls;
  size_t caption_hits;
  size_t backend_calls;
} vad_cache_stats;

VAD_API vad_status vad_pipeline_ingest(vad_pipeline* p, vad_ingest_stats* stats);
VAD_API vad_status vad_pipeline_embed(vad_pipeline* p, vad_cache_stats* stats);
VAD_API vad_status vad_pipeline_caption(vad_pipeline* p, vad_cache_stats* stats);
/* holdout may be NULL (every LOPO fold). all_persons != 0 trains one model
   on everyone. Writes the number of checkpoints to *count when non-NULL. */
VAD_API vad_status vad_pipeline_train(vad_pipeline* p, const char* holdout, int all_persons,
                                      size_t* count);
/* checkpoints_dir may be NULL (train each fold). The report is also
   written under the run directory. */
VAD_API vad_status vad_pipeline_eval_lopo(vad_pipeline* p, const char* checkpoints_dir,
                                          vad_report** out);
VAD_API vad_status vad_pipeline_eval_cross(vad_pipeline* p, int allow_same, vad_report** out);
VAD_API vad_status vad_pipeline_baseline_vlm(vad_pipeline* p, vad_report** out);

/* Reports. */
typedef enum vad_report_format { VAD_REPORT_MARKDOWN = 0, VAD_REPORT_CSV = 1 } vad_report_format;

/* Reads a report.json. */
VAD_API vad_status vad_report_load(const char* path, vad_report** out);
VAD_API vad_status vad_report_render(const vad_report* r, vad_report_format format, char** out);
/* Path of the markdown report written for this report, empty if none. */
VAD_API const char* vad_report_path(const vad_report* r);
VAD_API size_t vad_report_person_count(const vad_report* r);
VAD_API const char* vad_report_person(const vad_report* r, size_t i);
VAD_API double vad_report_person_f1(const vad_report* r, size_t i);
VAD_API double vad_report_average(const vad_report* r);
VAD_API double vad_report_std(const vad_report* r);
VAD_API void vad_report_destroy(vad_report* r);

/* Diagnostics text; *problems counts damaged caches or data. cfg may be
   NULL for defaults. */
VAD_API vad_status vad_doctor(const vad_config* cfg, char** out, int* problems);

/* Writes the synthetic image fixture (annotations.csv, frames/,
   config.toml) under root. */
VAD_API vad_status vad_write_fixture(const char* root, int persons, int segments_per_class,
                                     uint64_t seed);

/* Low-level numerics. */
/* F1 of the positive class (1) from parallel label arrays. */
VAD_API vad_status vad_f1_score(const int* truth, const int* predicted, size_t n, double* out);
VAD_API vad_status vad_bce_with_logits(double logit, double label, double* out);
/* Softmax of cos(visual, class_k) / temperature over k classes of dim d. */
VAD_API vad_status vad_zero_shot_score(const float* visual, const float* classes, size_t k,
                                       size_t d, double temperature, double* out);

#ifdef __cplusplus
}
#endif

#endif  /* VADCLIP_VADCLIP_H_ */
