// Copyright 2026 The kmip Authors. All Rights Reserved.
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

/* C interface to the kmip library. Every fallible call returns a
 * kmip_status; on failure kmip_last_error() describes the problem (per
 * thread, until the next failing call). Objects are opaque handles released
 * with their *_destroy function; strings returned through char** are
 * released with kmip_string_free. */
#ifndef KMIP_KMIP_H_
#define KMIP_KMIP_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define KMIP_API __attribute__((visibility("default")))
#else
#define KMIP_API
#endif

typedef enum kmip_status {
  KMIP_OK = 0,
  KMIP_ERR_SHAPE = 1,
  KMIP_ERR_PARAMETER = 2,
  KMIP_ERR_DOMAIN = 3,
  KMIP_ERR_PARSE = 4,
  KMIP_ERR_VALIDATION = 5,
  KMIP_ERR_CONTRACT = 6,
  KMIP_ERR_SCHEME = 7,
  KMIP_ERR_IO = 8,
  KMIP_ERR_NON_FINITE = 9,
  KMIP_ERR_NULL_ARGUMENT = 10,
  KMIP_ERR_INTERNAL = 99
} kmip_status;

typedef enum kmip_attention_kind { KMIP_ATTENTION_FULL = 0, KMIP_ATTENTION_KMIP = 1 } kmip_attention_kind;

KMIP_API const char* kmip_version(void);
KMIP_API const char* kmip_status_name(kmip_status status);
KMIP_API const char* kmip_last_error(void);
KMIP_API void kmip_string_free(char* s);

/* ---- matrices (row-major doubles) ---- */
typedef struct kmip_matrix kmip_matrix;

/* data may be NULL for a zero matrix; otherwise rows * cols values are copied. */
KMIP_API kmip_status kmip_matrix_create(size_t rows, size_t cols, const double* data,
                                        kmip_matrix** out);
KMIP_API kmip_status kmip_matrix_random_normal(size_t rows, size_t cols, uint64_t seed,
                                               kmip_matrix** out);
KMIP_API void kmip_matrix_destroy(kmip_matrix* m);
KMIP_API size_t kmip_matrix_rows(const kmip_matrix* m);
KMIP_API size_t kmip_matrix_cols(const kmip_matrix* m);
KMIP_API const double* kmip_matrix_data(const kmip_matrix* m);

/* ---- workspaces (byte accounting) ---- */
typedef struct kmip_workspace kmip_workspace;

KMIP_API kmip_status kmip_workspace_create(kmip_workspace** out);
KMIP_API void kmip_workspace_destroy(kmip_workspace* ws);
KMIP_API uint64_t kmip_workspace_live_bytes(const kmip_workspace* ws);
KMIP_API uint64_t kmip_workspace_peak_bytes(const kmip_workspace* ws);

/* ---- graphs ---- */
typedef struct kmip_graph kmip_graph;

KMIP_API kmip_status kmip_graph_load(const char* path, kmip_graph** out);
KMIP_API kmip_status kmip_graph_from_json(const char* text, kmip_graph** out);
KMIP_API kmip_status kmip_graph_to_json(const kmip_graph* g, char** out);
KMIP_API kmip_status kmip_graph_save(const kmip_graph* g, const char* path);
KMIP_API void kmip_graph_destroy(kmip_graph* g);
KMIP_API size_t kmip_graph_num_nodes(const kmip_graph* g);
KMIP_API size_t kmip_graph_num_edges(const kmip_graph* g);

/* ---- exact top-k inner products ---- */
typedef struct kmip_tile_config {
  size_t query_tile; /* default 64 */
  size_t key_tile;   /* default 1024 */
  size_t threads;    /* default 1 */
} kmip_tile_config;

KMIP_API void kmip_tile_config_defaults(kmip_tile_config* cfg);

/* For each row of q, the k rows of keys with the largest inner products,
 * best first (ties: lower index first). indices and values must hold
 * rows(q) * k entries. tiles and ws may be NULL. */
KMIP_API kmip_status kmip_topk(const kmip_matrix* q, const kmip_matrix* keys, size_t k,
                               const kmip_tile_config* tiles, kmip_workspace* ws,
                               int64_t* indices, double* values);

/* ---- attention ---- */
typedef struct kmip_attention kmip_attention;

/* Gaussian weights with standard deviation 1/sqrt(fan_in). */
KMIP_API kmip_status kmip_attention_create_random(size_t d_model, size_t heads, size_t d_k,
                                                  size_t d_v, size_t k, uint64_t seed,
                                                  kmip_attention** out);
KMIP_API void kmip_attention_destroy(kmip_attention* a);

/* y = attention(x). With grad_y non-NULL the backward pass also runs and
 * *grad_x receives d<grad_y, y>/dx. tiles and ws may be NULL. */
KMIP_API kmip_status kmip_attention_run(const kmip_attention* a, kmip_attention_kind kind,
                                        const kmip_matrix* x, const kmip_matrix* grad_y,
                                        const kmip_tile_config* tiles, kmip_workspace* ws,
                                        kmip_matrix** y, kmip_matrix** grad_x);

/* ---- Weisfeiler-Lehman tests ---- */

/* scheme: "wl1", "constant", "lap_pe[:m]", "rwse[:m]", "gps", "gps:lap_pe[:m]",
 * "gps:rwse[:m]". quantum <= 0 selects the default 1e-8. iteration is -1
 * when the graphs are not distinguished. report (may be NULL) receives the
 * JSON report. */
KMIP_API kmip_status kmip_wl_distinguish(const kmip_graph* a, const kmip_graph* b,
                                         const char* scheme, size_t max_iters, double quantum,
                                         int* distinguished, int64_t* iteration,
                                         char** report);

/* ---- experiments ----
 * Output paths of "-" write to standard output. */
typedef struct kmip_bench_config {
  const size_t* ns;
  size_t num_ns;
  const size_t* ks;
  size_t num_ks;
  const size_t* dks;
  size_t num_dks;
  const char* methods;  /* comma list of full,kmip_naive,kmip_tiled; NULL: all */
  const char* settings; /* comma list of inference,training; NULL: both */
  size_t repeats;
  uint64_t seed;
  size_t threads;
  uint64_t mem_ceiling_bytes;
} kmip_bench_config;

KMIP_API void kmip_bench_config_defaults(kmip_bench_config* cfg);
KMIP_API kmip_status kmip_run_bench(const kmip_bench_config* cfg, const char* out_csv);

typedef struct kmip_approx_config {
  size_t n;
  size_t d;
  size_t heads;
  const size_t* ks;
  size_t num_ks;
  size_t instances;
  uint64_t seed;
  size_t threads;
  const char* graphs_dir; /* NULL: random normal Q, K, V */
} kmip_approx_config;

KMIP_API void kmip_approx_config_defaults(kmip_approx_config* cfg);
KMIP_API kmip_status kmip_run_approx(const kmip_approx_config* cfg, const char* out_csv);

typedef struct kmip_gen_config {
  const char* kind; /* clusters or rings */
  size_t n;
  size_t num_graphs;
  size_t knn_k;
  size_t dim;
  size_t classes;
  double sigma;
  uint64_t seed;
} kmip_gen_config;

KMIP_API void kmip_gen_config_defaults(kmip_gen_config* cfg);
KMIP_API kmip_status kmip_run_gen(const kmip_gen_config* cfg, const char* out_dir);

/* Model and optimizer settings as string key/value pairs. */
typedef struct kmip_train_config kmip_train_config;

KMIP_API kmip_status kmip_train_config_create(kmip_train_config** out);
KMIP_API void kmip_train_config_destroy(kmip_train_config* cfg);
KMIP_API kmip_status kmip_train_config_set(kmip_train_config* cfg, const char* key,
                                           const char* value);
/* Applies key=value lines; blank lines and lines starting with # are skipped. */
KMIP_API kmip_status kmip_train_config_load(kmip_train_config* cfg, const char* path);
KMIP_API size_t kmip_train_config_key_count(void);
/* Name, help text and default value of key i; NULL if i is out of range. */
KMIP_API const char* kmip_train_config_key_name(size_t i);
KMIP_API const char* kmip_train_config_key_help(size_t i);
KMIP_API const char* kmip_train_config_key_default(size_t i);

/* Trains on the graphs in dataset_dir (split 70/15/15 by graph), writes the
 * per-epoch log to log_csv and, if summary is non-NULL, a JSON summary with
 * the final accuracies. */
KMIP_API kmip_status kmip_run_train(const kmip_train_config* cfg, const char* dataset_dir,
                                    const char* log_csv, char** summary);

typedef struct kmip_ksweep_config {
  const size_t* ks; /* 0 means full attention */
  size_t num_ks;
  const uint64_t* seeds;
  size_t num_seeds;
} kmip_ksweep_config;

KMIP_API kmip_status kmip_run_ksweep(const kmip_ksweep_config* cfg,
                                     const kmip_train_config* train, const char* dataset_dir,
                                     const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* KMIP_KMIP_H_ */
