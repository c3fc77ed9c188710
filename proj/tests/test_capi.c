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

/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "vflsa/vflsa.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

#define EXPECT_OK(call)                                                          \
  do {                                                                           \
    vfl_status s_ = (call);                                                      \
    if (s_ != VFL_OK) {                                                          \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,        \
              vfl_status_name(s_), vfl_last_error());                             \
      ++failures;                                                                \
    }                                                                            \
  } while (0)

static const char* kSmall =
    "{\"dataset\": \"banking\", \"synthetic_rows\": 600, \"batch_size\": 64, \"hidden\": 8,"
    " \"seed\": 3, \"log_messages\": true}";
static const char* kSmallPlain =
    "{\"dataset\": \"banking\", \"synthetic_rows\": 600, \"batch_size\": 64, \"hidden\": 8,"
    " \"seed\": 3, \"mode\": \"plain\"}";

static int file_nonempty(const char* path) {
  FILE* f = fopen(path, "rb");
  long n;
  if (!f) return 0;
  fseek(f, 0, SEEK_END);
  n = ftell(f);
  fclose(f);
  return n > 0;
}

static void test_basics(void) {
  uint64_t enc = 0;
  double dec = 0.0;
  uint8_t seed[32] = {0};
  uint64_t a[8], b[4];
  EXPECT(strcmp(vfl_version(), "0.3.0") == 0);
  EXPECT(strcmp(vfl_status_name(VFL_ERR_PROTOCOL), "protocol error") == 0);
  EXPECT_OK(vfl_fx_encode(1.5, 24, &enc));
  EXPECT(enc == 25165824u);
  EXPECT_OK(vfl_fx_decode(enc, 24, &dec));
  EXPECT(dec == 1.5);
  EXPECT(vfl_fx_encode(1e30, 24, &enc) == VFL_ERR_NUMERIC);
  EXPECT(strcmp(vfl_last_error_code(), "RangeOverflow") == 0);
  EXPECT_OK(vfl_prg_expand(seed, 8, a));
  EXPECT_OK(vfl_prg_expand(seed, 4, b));
  EXPECT(memcmp(a, b, sizeof b) == 0);
}

static void test_errors(void) {
  vfl_session* s = NULL;
  EXPECT(vfl_session_create("{\"no_such_key\": 1}", &s) == VFL_ERR_CONFIG);
  EXPECT(s == NULL);
  EXPECT(strcmp(vfl_last_error_code(), "ConfigError") == 0);
  EXPECT(strstr(vfl_last_error(), "no_such_key") != NULL);
  EXPECT(vfl_session_create("{\"csv\": \"/nonexistent/bank.csv\"}", &s) == VFL_ERR_IO);
  EXPECT(vfl_session_create("not json", &s) == VFL_ERR_CONFIG);
  EXPECT(vfl_session_create(kSmall, NULL) == VFL_ERR_CONFIG);
}

static void test_session(void) {
  vfl_session* s = NULL;
  vfl_session* plain = NULL;
  vfl_session* other = NULL;
  vfl_session_info info;
  vfl_test_result res;
  size_t pairs = 0;
  size_t need;
  char small_buf[8];
  char* buf;
  double losses[3];
  int i;

  EXPECT_OK(vfl_session_create(kSmall, &s));
  if (!s) return;
  EXPECT_OK(vfl_session_info_get(s, &info));
  EXPECT(info.num_clients == 5);
  EXPECT(info.hidden == 8);
  EXPECT(info.input_width == 80);
  EXPECT(info.train_samples + info.test_samples == 600);

  EXPECT_OK(vfl_session_setup_check(s, &pairs));
  EXPECT(pairs == 10);

  EXPECT_OK(vfl_session_train(s, 3, losses));
  for (i = 0; i < 3; ++i) EXPECT(losses[i] > 0.0 && losses[i] < 5.0);
  EXPECT_OK(vfl_session_info_get(s, &info));
  EXPECT(info.next_round == 3);

  EXPECT_OK(vfl_session_test(s, "capi_predictions.csv", &res));
  EXPECT(res.count == info.test_samples);
  EXPECT(res.accuracy >= 0.0 && res.accuracy <= 1.0);
  EXPECT(res.setup_phases >= 1);
  EXPECT(file_nonempty("capi_predictions.csv"));

  EXPECT_OK(vfl_session_write_trace(s, "capi_trace.jsonl"));
  EXPECT(file_nonempty("capi_trace.jsonl"));

  EXPECT(vfl_session_write_metrics(s, NULL, "capi_metrics.csv") == VFL_ERR_CONFIG);
  EXPECT(strcmp(vfl_last_error_code(), "MissingBaseline") == 0);
  EXPECT_OK(vfl_session_create(kSmallPlain, &plain));
  if (plain) {
    EXPECT_OK(vfl_session_train(plain, 3, NULL));
    EXPECT_OK(vfl_session_test(plain, NULL, &res));
    EXPECT_OK(vfl_session_write_metrics(s, plain, "capi_metrics.csv"));
    EXPECT(file_nonempty("capi_metrics.csv"));
    EXPECT(vfl_session_write_trace(plain, "capi_trace2.jsonl") == VFL_ERR_CONFIG);
  }

  EXPECT_OK(vfl_session_save_checkpoint(s, "capi_model"));
  EXPECT_OK(vfl_session_create(kSmall, &other));
  if (other) {
    EXPECT_OK(vfl_session_load_checkpoint(other, "capi_model"));
    EXPECT(vfl_session_load_checkpoint(other, "capi_missing") == VFL_ERR_IO);
    vfl_session_destroy(other);
  }

  need = vfl_session_resolved_config(s, small_buf, sizeof small_buf);
  EXPECT(need > sizeof small_buf);
  EXPECT(small_buf[sizeof small_buf - 1] == '\0');
  buf = (char*)malloc(need);
  EXPECT(vfl_session_resolved_config(s, buf, need) == need);
  EXPECT(strstr(buf, "\"batch_size\"") != NULL);
  free(buf);

  vfl_session_destroy(plain);
  vfl_session_destroy(s);
  vfl_session_destroy(NULL);
}

static void test_tools(void) {
  const size_t sizes[1] = {4};
  double speedup = 0.0;
  int ok = 0;
  vfl_session* s = NULL;
  EXPECT_OK(vfl_generate_dataset("adult", 300, 5, "capi_adult.csv", "capi_adult_schema.json",
                                 "capi_adult_partition.json"));
  EXPECT(file_nonempty("capi_adult.csv"));
  EXPECT_OK(vfl_session_create(
      "{\"dataset\": \"adult\", \"csv\": \"capi_adult.csv\", \"schema\": \"capi_adult_schema.json\","
      " \"partition\": \"capi_adult_partition.json\", \"batch_size\": 32, \"hidden\": 4}",
      &s));
  if (s) {
    EXPECT_OK(vfl_session_train(s, 1, NULL));
    vfl_session_destroy(s);
  }
  EXPECT(vfl_generate_dataset("mnist", 10, 0, "x.csv", NULL, NULL) != VFL_OK);

  EXPECT_OK(vfl_run_ablation(sizes, 1, 1, 256, 7, "capi_ablation.csv", NULL, &speedup, &ok));
  EXPECT(ok == 1);
  EXPECT(speedup > 1.0);
  EXPECT_OK(vfl_run_overhead_suite(
      "{\"dataset\": \"banking\", \"synthetic_rows\": 400, \"batch_size\": 64, \"hidden\": 4}", 2, 2,
      "capi_table1.csv", "capi_table2.csv"));
  EXPECT(file_nonempty("capi_table1.csv"));
  EXPECT(file_nonempty("capi_table2.csv"));
}

int main(void) {
  test_basics();
  test_errors();
  test_session();
  test_tools();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
