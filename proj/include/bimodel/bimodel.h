// Copyright 2026 The Bimodel Authors.
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

/* C interface to the bi-model semantic frame parser.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_destroy function. Every fallible call returns a bm_status; on
 * failure bm_last_error() describes the problem (per thread, valid until the
 * next call on that thread). Strings returned through char** out-parameters
 * are heap allocated and released with bm_free_string().
 */
#ifndef BIMODEL_BIMODEL_H_PUBLIC_
#define BIMODEL_BIMODEL_H_PUBLIC_

#include <stddef.h>

#if defined(BIMODEL_BUILDING_LIBRARY)
#define BM_API __attribute__((visibility("default")))
#else
#define BM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bm_status {
  BM_OK = 0,
  BM_ERR_USAGE = 1,      /* bad argument, unknown key, unparsable value */
  BM_ERR_DATA = 2,       /* malformed or unusable corpus */
  BM_ERR_VERIFY = 3,     /* a verification run failed its threshold */
  BM_ERR_IO = 4,         /* file could not be read or written */
  BM_ERR_CHECKPOINT = 5, /* corrupt, truncated or incompatible checkpoint */
  BM_ERR_INTERNAL = 6
} bm_status;

typedef struct bm_config bm_config;
typedef struct bm_model bm_model;

/* Receives each training log record as one line of JSON (no newline). */
typedef void (*bm_log_fn)(const char *json_line, void *user_data);

BM_API const char *bm_version(void);
BM_API const char *bm_last_error(void);
BM_API void bm_free_string(char *s);

/* Run configuration: defaults, then a key = value file, then single keys. */
BM_API bm_config *bm_config_create(void);
BM_API void bm_config_destroy(bm_config *config);
BM_API bm_status bm_config_load_file(bm_config *config, const char *path);
/* Keys accept snake_case or kebab-case. */
BM_API bm_status bm_config_set(bm_config *config, const char *key, const char *value);
BM_API bm_status bm_config_get(const bm_config *config, const char *key, char **value);
/* Takes the seed from BIMODEL_SEED unless a seed was set explicitly. */
BM_API bm_status bm_config_apply_seed_env(bm_config *config);
BM_API bm_status bm_config_to_text(const bm_config *config, char **text);
BM_API size_t bm_config_key_count(void);
BM_API const char *bm_config_key_name(size_t index);

/* Trains and writes the checkpoint, <checkpoint>.config and the JSONL log.
 * summary_json (optional) receives the final log record. */
BM_API bm_status bm_train(const bm_config *config, bm_log_fn log, void *user_data,
                          char **summary_json);
/* Shared vs. zero-sharing models over num_seeds seeds; two result rows. */
BM_API bm_status bm_ablate(const bm_config *config, size_t num_seeds, bm_log_fn log,
                           void *user_data, char **result_json, char **table);

BM_API bm_status bm_model_load(const char *path, bm_model **model);
BM_API void bm_model_destroy(bm_model *model);
BM_API bm_status bm_model_save(const bm_model *model, const char *path);
/* The run configuration stored in the checkpoint. */
BM_API bm_status bm_model_config_text(const bm_model *model, char **text);
/* format may be NULL (guessed from the extension). */
BM_API bm_status bm_model_evaluate(const bm_model *model, const char *corpus_path,
                                   const char *format, int strict_chunks, char **report_json);
/* Whitespace-tokenized text in; {"intent": ..., "tokens": [...], "tags": [...]} out. */
BM_API bm_status bm_model_predict(const bm_model *model, const char *text, char **result_json);

/* Renders an evaluation report (as returned by bm_model_evaluate) as a table. */
BM_API bm_status bm_report_table(const char *report_json, char **table);

/* Finite-difference check of every parameter gradient on a toy model.
 * size: "small" or "tiny". corrupt_parameter may be NULL. Returns
 * BM_ERR_VERIFY when the threshold is exceeded; the reports are filled in
 * either way. */
BM_API bm_status bm_gradcheck(const char *size, const char *corrupt_parameter,
                              char **report_json, char **report_text);

#ifdef __cplusplus
}
#endif

#endif /* BIMODEL_BIMODEL_H_PUBLIC_ */
