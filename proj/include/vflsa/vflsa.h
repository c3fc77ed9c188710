/*
 * Copyright 2026 The vflsa Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the vflsa library.
 *
 * Every function that can fail returns a vfl_status. On failure the calling
 * thread's vfl_last_error() holds a message and vfl_last_error_code() the
 * name of the underlying error kind (for example "MissingContribution").
 * Strings returned by the library stay valid until the next call on the same
 * thread. Sessions are not thread-safe; use one per thread. */

#ifndef VFLSA_VFLSA_H_
#define VFLSA_VFLSA_H_

#include <stddef.h>
#include <stdint.h>

#if defined(VFLSA_BUILDING_LIBRARY)
#define VFL_API __attribute__((visibility("default")))
#else
#define VFL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vfl_status {
  VFL_OK = 0,
  VFL_ERR_CONFIG = 1,   /* invalid configuration or arguments */
  VFL_ERR_DATA = 2,     /* schema, parse, partition or coverage problems */
  VFL_ERR_IO = 3,       /* files that cannot be read or written */
  VFL_ERR_PROTOCOL = 4, /* missing messages or contributions, setup timeouts */
  VFL_ERR_CRYPTO = 5,   /* invalid keys, authentication failures */
  VFL_ERR_NUMERIC = 6,  /* range overflow, shape or length mismatches */
  VFL_ERR_INTERNAL = 7
} vfl_status;

typedef struct vfl_session vfl_session;

typedef struct vfl_test_result {
  size_t count;
  double accuracy;
  double auc;
  size_t setup_phases;
} vfl_test_result;

typedef struct vfl_session_info {
  size_t num_clients; /* active + passive */
  size_t setup_phases;
  uint32_t next_round;
  uint32_t epoch;
  size_t input_width;
  size_t hidden;
  size_t train_samples;
  size_t test_samples;
} vfl_session_info;

VFL_API const char* vfl_version(void);
VFL_API const char* vfl_status_name(vfl_status status);
VFL_API const char* vfl_last_error(void);
VFL_API const char* vfl_last_error_code(void);

/* `config_json` is a session configuration object; NULL means defaults. */
VFL_API vfl_status vfl_session_create(const char* config_json, vfl_session** out);
VFL_API void vfl_session_destroy(vfl_session* session);
VFL_API vfl_status vfl_session_info_get(const vfl_session* session, vfl_session_info* out);

/* Runs one setup phase and reports the number of pairwise secrets. */
VFL_API vfl_status vfl_session_setup_check(vfl_session* session, size_t* pairs);
/* Runs `rounds` training rounds. `losses` may be NULL or hold `rounds` values. */
VFL_API vfl_status vfl_session_train(vfl_session* session, uint32_t rounds, double* losses);
/* Masked inference over the test split. `predictions_csv` may be NULL; when
 * given, one line per sample is written: id,probability,decision,label. */
VFL_API vfl_status vfl_session_test(vfl_session* session, const char* predictions_csv, vfl_test_result* out);

VFL_API vfl_status vfl_session_save_checkpoint(vfl_session* session, const char* prefix);
VFL_API vfl_status vfl_session_load_checkpoint(vfl_session* session, const char* prefix);
/* Message log as JSON lines; requires log_messages in the configuration. */
VFL_API vfl_status vfl_session_write_trace(vfl_session* session, const char* path);
/* Per-party metrics with overhead against `baseline` (a plain-mode session
 * that ran the same phases). A NULL baseline fails with MissingBaseline. */
VFL_API vfl_status vfl_session_write_metrics(vfl_session* session, const vfl_session* baseline, const char* path);
/* Copies the resolved configuration JSON into `buffer` (NUL-terminated, may be
 * truncated) and returns the length needed including the terminator. */
VFL_API size_t vfl_session_resolved_config(const vfl_session* session, char* buffer, size_t capacity);

/* Table-shaped overhead CSVs; `config_json` as for vfl_session_create. */
VFL_API vfl_status vfl_run_overhead_suite(const char* config_json, int repetitions, uint32_t rounds,
                                          const char* table1_csv, const char* table2_csv);
/* Dot-product ablation. `gnuplot_path` may be NULL. `min_speedup` and
 * `oracle_ok` may be NULL. */
VFL_API vfl_status vfl_run_ablation(const size_t* batch_sizes, size_t count, int repetitions, unsigned key_bits,
                                    uint64_t seed, const char* csv_path, const char* gnuplot_path,
                                    double* min_speedup, int* oracle_ok);
/* Synthetic rows for a built-in dataset shape. `schema_path` and
 * `partition_path` may be NULL. */
VFL_API vfl_status vfl_generate_dataset(const char* dataset, size_t rows, uint64_t seed, const char* csv_path,
                                        const char* schema_path, const char* partition_path);

VFL_API vfl_status vfl_fx_encode(double x, int scale_bits, uint64_t* out);
VFL_API vfl_status vfl_fx_decode(uint64_t x, int scale_bits, double* out);
VFL_API vfl_status vfl_prg_expand(const uint8_t seed[32], size_t count, uint64_t* out);

#ifdef __cplusplus
}
#endif

#endif /* VFLSA_VFLSA_H_ */
