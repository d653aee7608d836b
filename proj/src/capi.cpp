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

#include "kmip/kmip.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kmip/attention.hpp"
#include "kmip/error.hpp"
#include "kmip/experiments.hpp"
#include "kmip/graph.hpp"
#include "kmip/mipkernel.hpp"
#include "kmip/rng.hpp"
#include "kmip/train.hpp"
#include "kmip/wl.hpp"
#include "kmip/workspace.hpp"

struct kmip_matrix {
  kmip::Matrix m;
};
struct kmip_workspace {
  kmip::Workspace ws;
};
struct kmip_graph {
  kmip::Graph g;
};
struct kmip_attention {
  kmip::AttentionParams<double> p;
};
struct kmip_train_config {
  kmip::GpsConfig model;
  kmip::TrainConfig train;
};

namespace {

thread_local std::string g_last_error;

kmip_status fail(kmip_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes.
template <typename F>
kmip_status guarded(F&& f) {
  try {
    f();
    return KMIP_OK;
  } catch (const kmip::Error& e) {
    return fail(static_cast<kmip_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(KMIP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(KMIP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(KMIP_ERR_INTERNAL, "unknown exception");
  }
}

#define KMIP_REQUIRE(ptr)                                             \
  do {                                                                \
    if ((ptr) == nullptr)                                             \
      return fail(KMIP_ERR_NULL_ARGUMENT, #ptr " must not be NULL");  \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kmip::TileConfig tiles_of(const kmip_tile_config* t) {
  kmip::TileConfig cfg;
  if (t) {
    cfg.query_tile = t->query_tile;
    cfg.key_tile = t->key_tile;
    cfg.threads = t->threads;
  }
  cfg.validate();
  return cfg;
}

template <typename T>
std::vector<T> to_vector(const T* data, std::size_t n) {
  if (n > 0 && data == nullptr) throw kmip::ParameterError("list pointer is NULL");
  return std::vector<T>(data, data + n);
}

std::vector<std::string> split_list(const char* s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw kmip::ParameterError("empty list");
  return out;
}

// Opens path for writing, or returns std::cout for "-".
class OutStream {
 public:
  explicit OutStream(const char* path) {
    if (path == nullptr || std::string(path) == "-") return;
    file_.open(path, std::ios::out | std::ios::trunc);
    if (!file_) throw kmip::IoError(std::string("cannot open ") + path + " for writing");
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    get().flush();
    if (!get()) throw kmip::IoError("write failed");
  }

 private:
  std::ofstream file_;
};

// ---- train config keys ----

struct KeySpec {
  const char* name;
  const char* help;
  const char* def;
  void (*set)(kmip_train_config&, const std::string&);
};

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size())
    throw kmip::ParameterError(key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || !std::isfinite(x))
    throw kmip::ParameterError(key + ": expected a finite number, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw kmip::ParameterError(key + ": expected true or false, got '" + v + "'");
}

#define KMIP_SIZE_KEY(name, field, help, def)                           \
  {name, help, def, [](kmip_train_config& c, const std::string& v) {    \
     c.field = parse_size(name, v);                                     \
   }}
#define KMIP_DOUBLE_KEY(name, field, help, def)                         \
  {name, help, def, [](kmip_train_config& c, const std::string& v) {    \
     c.field = parse_double(name, v);                                   \
   }}
#define KMIP_BOOL_KEY(name, field, help, def)                           \
  {name, help, def, [](kmip_train_config& c, const std::string& v) {    \
     c.field = parse_bool(name, v);                                     \
   }}

const KeySpec kKeys[] = {
    KMIP_SIZE_KEY("epochs", train.epochs, "training epochs", "100"),
    KMIP_DOUBLE_KEY("lr", train.lr, "peak learning rate", "0.001"),
    KMIP_DOUBLE_KEY("weight_decay", train.weight_decay, "AdamW weight decay", "1e-05"),
    KMIP_SIZE_KEY("warmup_epochs", train.warmup_epochs, "linear warmup epochs", "5"),
    KMIP_DOUBLE_KEY("beta1", train.beta1, "Adam first moment decay", "0.9"),
    KMIP_DOUBLE_KEY("beta2", train.beta2, "Adam second moment decay", "0.999"),
    KMIP_DOUBLE_KEY("eps", train.eps, "Adam epsilon", "1e-08"),
    KMIP_BOOL_KEY("class_weighted", train.class_weighted, "class-weighted cross entropy",
                  "true"),
    {"seed", "initialization, shuffling and dropout seed", "0",
     [](kmip_train_config& c, const std::string& v) {
       c.train.seed = static_cast<std::uint64_t>(parse_size("seed", v));
     }},
    {"attention", "full or kmip", "kmip",
     [](kmip_train_config& c, const std::string& v) {
       c.train.kind = kmip::attention_kind_from_string(v);
     }},
    KMIP_SIZE_KEY("k", model.k, "keys kept per query by k-MIP attention", "10"),
    KMIP_SIZE_KEY("threads", train.tiles.threads, "worker threads for top-k", "1"),
    KMIP_SIZE_KEY("query_tile", train.tiles.query_tile, "top-k query tile rows", "64"),
    KMIP_SIZE_KEY("key_tile", train.tiles.key_tile, "top-k key tile rows", "1024"),
    KMIP_SIZE_KEY("hidden", model.hidden, "hidden width", "16"),
    KMIP_SIZE_KEY("layers", model.layers, "GPS layers", "2"),
    KMIP_SIZE_KEY("heads", model.heads, "attention heads", "1"),
    KMIP_SIZE_KEY("d_k", model.d_k, "query/key width per head (0: hidden)", "0"),
    KMIP_SIZE_KEY("d_v", model.d_v, "value width per head (0: hidden)", "0"),
    KMIP_SIZE_KEY("mlp_hidden", model.mlp_hidden, "layer MLP width (0: 2*hidden)", "0"),
    KMIP_SIZE_KEY("head_hidden", model.head_hidden, "output head width (0: hidden)", "0"),
    KMIP_SIZE_KEY("classes", model.classes, "minimum number of classes", "2"),
    {"pe", "positional encoding: none, lap_pe or rwse", "none",
     [](kmip_train_config& c, const std::string& v) {
       c.model.pe.kind = kmip::pe_kind_from_string(v);
     }},
    KMIP_SIZE_KEY("pe_dim", model.pe.dim, "positional encoding width", "0"),
    KMIP_BOOL_KEY("layer_norm", model.layer_norm, "layer normalization", "true"),
    KMIP_DOUBLE_KEY("attn_dropout", model.attn_dropout, "attention output dropout", "0"),
    KMIP_DOUBLE_KEY("mlp_dropout", model.mlp_dropout, "layer MLP dropout", "0"),
};
constexpr std::size_t kNumKeys = sizeof(kKeys) / sizeof(kKeys[0]);

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void set_key(kmip_train_config& c, const std::string& key, const std::string& value) {
  for (const auto& k : kKeys) {
    if (key == k.name) {
      k.set(c, value);
      return;
    }
  }
  throw kmip::ParameterError("unknown training option '" + key + "'");
}

// Fills data-dependent model dimensions.
kmip::GpsConfig model_for(const kmip_train_config& c, const std::vector<kmip::Graph>& all) {
  kmip::GpsConfig mc = c.model;
  mc.d_in = all.front().feature_dim();
  mc.d_edge_in = all.front().edge_dim();
  mc.classes = std::max(mc.classes, kmip::count_classes(all));
  return mc;
}

std::vector<kmip::Graph> load_labelled(const char* dir) {
  auto graphs = kmip::load_dataset(dir);
  if (graphs.empty()) throw kmip::IoError(std::string("no graphs in ") + dir);
  return graphs;
}

}  // namespace

extern "C" {

const char* kmip_version(void) { return "0.1.0"; }

const char* kmip_status_name(kmip_status status) {
  switch (status) {
    case KMIP_OK: return "ok";
    case KMIP_ERR_SHAPE: return "shape error";
    case KMIP_ERR_PARAMETER: return "parameter error";
    case KMIP_ERR_DOMAIN: return "domain error";
    case KMIP_ERR_PARSE: return "parse error";
    case KMIP_ERR_VALIDATION: return "validation error";
    case KMIP_ERR_CONTRACT: return "contract error";
    case KMIP_ERR_SCHEME: return "scheme error";
    case KMIP_ERR_IO: return "io error";
    case KMIP_ERR_NON_FINITE: return "non-finite error";
    case KMIP_ERR_NULL_ARGUMENT: return "null argument";
    case KMIP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* kmip_last_error(void) { return g_last_error.c_str(); }

void kmip_string_free(char* s) { std::free(s); }

// ---- matrices ----

kmip_status kmip_matrix_create(size_t rows, size_t cols, const double* data,
                               kmip_matrix** out) {
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<kmip_matrix>();
    h->m = kmip::Matrix(rows, cols);
    if (data) std::memcpy(h->m.data(), data, rows * cols * sizeof(double));
    *out = h.release();
  });
}

kmip_status kmip_matrix_random_normal(size_t rows, size_t cols, uint64_t seed,
                                      kmip_matrix** out) {
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    kmip::Rng rng(seed);
    auto h = std::make_unique<kmip_matrix>();
    h->m = kmip::random_normal(rows, cols, rng);
    *out = h.release();
  });
}

void kmip_matrix_destroy(kmip_matrix* m) { delete m; }
size_t kmip_matrix_rows(const kmip_matrix* m) { return m ? m->m.rows() : 0; }
size_t kmip_matrix_cols(const kmip_matrix* m) { return m ? m->m.cols() : 0; }
const double* kmip_matrix_data(const kmip_matrix* m) { return m ? m->m.data() : nullptr; }

// ---- workspaces ----

kmip_status kmip_workspace_create(kmip_workspace** out) {
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new kmip_workspace(); });
}

void kmip_workspace_destroy(kmip_workspace* ws) { delete ws; }
uint64_t kmip_workspace_live_bytes(const kmip_workspace* ws) {
  return ws ? ws->ws.live_bytes() : 0;
}
uint64_t kmip_workspace_peak_bytes(const kmip_workspace* ws) {
  return ws ? ws->ws.peak_bytes() : 0;
}

// ---- graphs ----

kmip_status kmip_graph_load(const char* path, kmip_graph** out) {
  KMIP_REQUIRE(path);
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new kmip_graph{kmip::load_graph(path)}; });
}

kmip_status kmip_graph_from_json(const char* text, kmip_graph** out) {
  KMIP_REQUIRE(text);
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new kmip_graph{kmip::graph_from_json(text)}; });
}

kmip_status kmip_graph_to_json(const kmip_graph* g, char** out) {
  KMIP_REQUIRE(g);
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = dup_string(kmip::graph_to_json(g->g)); });
}

kmip_status kmip_graph_save(const kmip_graph* g, const char* path) {
  KMIP_REQUIRE(g);
  KMIP_REQUIRE(path);
  return guarded([&] { kmip::save_graph(g->g, path); });
}

void kmip_graph_destroy(kmip_graph* g) { delete g; }
size_t kmip_graph_num_nodes(const kmip_graph* g) { return g ? g->g.num_nodes() : 0; }
size_t kmip_graph_num_edges(const kmip_graph* g) { return g ? g->g.num_edges() : 0; }

// ---- top-k ----

void kmip_tile_config_defaults(kmip_tile_config* cfg) {
  if (!cfg) return;
  const kmip::TileConfig d;
  cfg->query_tile = d.query_tile;
  cfg->key_tile = d.key_tile;
  cfg->threads = d.threads;
}

kmip_status kmip_topk(const kmip_matrix* q, const kmip_matrix* keys, size_t k,
                      const kmip_tile_config* tiles, kmip_workspace* ws, int64_t* indices,
                      double* values) {
  KMIP_REQUIRE(q);
  KMIP_REQUIRE(keys);
  KMIP_REQUIRE(indices);
  KMIP_REQUIRE(values);
  return guarded([&] {
    kmip::Workspace local;
    kmip::Workspace& w = ws ? ws->ws : local;
    const auto r = kmip::rowwise_topk(q->m, keys->m, k, tiles_of(tiles), w);
    for (std::size_t i = 0; i < r.indices.size(); ++i) {
      indices[i] = static_cast<int64_t>(r.indices.data()[i]);
      values[i] = r.values.data()[i];
    }
  });
}

// ---- attention ----

kmip_status kmip_attention_create_random(size_t d_model, size_t heads, size_t d_k,
                                         size_t d_v, size_t k, uint64_t seed,
                                         kmip_attention** out) {
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    kmip::Rng rng(seed);
    auto h = std::make_unique<kmip_attention>();
    h->p = kmip::AttentionParams<double>::random(d_model, heads, d_k, d_v, k, rng);
    h->p.validate();
    *out = h.release();
  });
}

void kmip_attention_destroy(kmip_attention* a) { delete a; }

kmip_status kmip_attention_run(const kmip_attention* a, kmip_attention_kind kind,
                               const kmip_matrix* x, const kmip_matrix* grad_y,
                               const kmip_tile_config* tiles, kmip_workspace* ws,
                               kmip_matrix** y, kmip_matrix** grad_x) {
  KMIP_REQUIRE(a);
  KMIP_REQUIRE(x);
  KMIP_REQUIRE(y);
  *y = nullptr;
  if (grad_y) {
    KMIP_REQUIRE(grad_x);
    *grad_x = nullptr;
  }
  if (kind != KMIP_ATTENTION_FULL && kind != KMIP_ATTENTION_KMIP)
    return fail(KMIP_ERR_PARAMETER, "unknown attention kind");
  return guarded([&] {
    kmip::Workspace local;
    kmip::Workspace& w = ws ? ws->ws : local;
    const auto k = kind == KMIP_ATTENTION_FULL ? kmip::AttentionKind::kFull
                                               : kmip::AttentionKind::kKmip;
    auto fwd = kmip::attention_forward(k, x->m, a->p, tiles_of(tiles), w);
    auto out_y = std::make_unique<kmip_matrix>();
    out_y->m = std::move(fwd.y);
    std::unique_ptr<kmip_matrix> out_gx;
    if (grad_y) {
      auto grads = kmip::attention_backward(fwd.tape, x->m, a->p, grad_y->m, w);
      out_gx = std::make_unique<kmip_matrix>();
      out_gx->m = std::move(grads.grad_x);
    }
    *y = out_y.release();
    if (grad_y) *grad_x = out_gx.release();
  });
}

// ---- WL ----

kmip_status kmip_wl_distinguish(const kmip_graph* a, const kmip_graph* b, const char* scheme,
                                size_t max_iters, double quantum, int* distinguished,
                                int64_t* iteration, char** report) {
  KMIP_REQUIRE(a);
  KMIP_REQUIRE(b);
  KMIP_REQUIRE(scheme);
  if (report) *report = nullptr;
  return guarded([&] {
    const std::string name = scheme;
    const double q = quantum > 0 ? quantum : 1e-8;
    kmip::Distinction d;
    if (name == "wl1") {
      d = kmip::wl1_distinguishes(a->g, b->g, max_iters);
    } else {
      auto s = kmip::EncodingScheme::from_name(name);
      s.quantum = q;
      d = kmip::distinguishes(a->g, b->g, s, max_iters);
    }
    if (distinguished) *distinguished = d.distinguished ? 1 : 0;
    if (iteration) *iteration = d.iteration ? static_cast<int64_t>(*d.iteration) : -1;
    if (report) *report = dup_string(kmip::distinction_json(d, name, q));
  });
}

// ---- bench ----

void kmip_bench_config_defaults(kmip_bench_config* cfg) {
  if (!cfg) return;
  static const size_t kNs[] = {1024};
  static const size_t kKs[] = {10};
  static const size_t kDks[] = {10};
  const kmip::BenchConfig d;
  *cfg = kmip_bench_config{kNs, 1, kKs, 1, kDks, 1, nullptr, nullptr,
                           d.repeats, d.seed, d.threads, d.mem_ceiling_bytes};
}

kmip_status kmip_run_bench(const kmip_bench_config* cfg, const char* out_csv) {
  KMIP_REQUIRE(cfg);
  return guarded([&] {
    kmip::BenchConfig c;
    c.ns = to_vector(cfg->ns, cfg->num_ns);
    c.ks = to_vector(cfg->ks, cfg->num_ks);
    c.dks = to_vector(cfg->dks, cfg->num_dks);
    if (cfg->methods) {
      c.methods.clear();
      for (const auto& m : split_list(cfg->methods))
        c.methods.push_back(kmip::bench_method_from_string(m));
    }
    if (cfg->settings) {
      c.settings.clear();
      for (const auto& s : split_list(cfg->settings))
        c.settings.push_back(kmip::bench_setting_from_string(s));
    }
    c.repeats = cfg->repeats;
    c.seed = cfg->seed;
    c.threads = cfg->threads;
    c.mem_ceiling_bytes = cfg->mem_ceiling_bytes;
    c.validate();
    OutStream out(out_csv);
    kmip::run_bench(c, &out.get());
    out.finish();
  });
}

// ---- approx ----

void kmip_approx_config_defaults(kmip_approx_config* cfg) {
  if (!cfg) return;
  static const size_t kKs[] = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  const kmip::ApproxConfig d;
  *cfg = kmip_approx_config{d.n,      d.d,    d.heads,   kKs,    sizeof(kKs) / sizeof(kKs[0]),
                            d.instances, d.seed, d.threads, nullptr};
}

kmip_status kmip_run_approx(const kmip_approx_config* cfg, const char* out_csv) {
  KMIP_REQUIRE(cfg);
  return guarded([&] {
    kmip::ApproxConfig c;
    c.n = cfg->n;
    c.d = cfg->d;
    c.heads = cfg->heads;
    c.ks = to_vector(cfg->ks, cfg->num_ks);
    c.instances = cfg->instances;
    c.seed = cfg->seed;
    c.threads = cfg->threads;
    c.validate();
    std::vector<kmip::Graph> graphs;
    if (cfg->graphs_dir) graphs = load_labelled(cfg->graphs_dir);
    OutStream out(out_csv);
    const auto result = kmip::run_approx(c, cfg->graphs_dir ? &graphs : nullptr);
    kmip::write_approx_header(out.get());
    for (const auto& r : result.rows) kmip::write_approx_row(out.get(), r);
    out.finish();
  });
}

// ---- gen ----

void kmip_gen_config_defaults(kmip_gen_config* cfg) {
  if (!cfg) return;
  const kmip::GenConfig d;
  *cfg = kmip_gen_config{"clusters", d.n,       d.num_graphs, d.knn_k,
                         d.dim,      d.classes, d.sigma,      d.seed};
}

kmip_status kmip_run_gen(const kmip_gen_config* cfg, const char* out_dir) {
  KMIP_REQUIRE(cfg);
  KMIP_REQUIRE(out_dir);
  return guarded([&] {
    kmip::GenConfig c;
    c.kind = kmip::dataset_kind_from_string(cfg->kind ? cfg->kind : "");
    c.n = cfg->n;
    c.num_graphs = cfg->num_graphs;
    c.knn_k = cfg->knn_k;
    c.dim = cfg->dim;
    c.classes = cfg->classes;
    c.sigma = cfg->sigma;
    c.seed = cfg->seed;
    c.validate();
    kmip::write_dataset(kmip::generate_dataset(c), out_dir);
  });
}

// ---- training ----

kmip_status kmip_train_config_create(kmip_train_config** out) {
  KMIP_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new kmip_train_config(); });
}

void kmip_train_config_destroy(kmip_train_config* cfg) { delete cfg; }

kmip_status kmip_train_config_set(kmip_train_config* cfg, const char* key, const char* value) {
  KMIP_REQUIRE(cfg);
  KMIP_REQUIRE(key);
  KMIP_REQUIRE(value);
  return guarded([&] { set_key(*cfg, trim(key), trim(value)); });
}

kmip_status kmip_train_config_load(kmip_train_config* cfg, const char* path) {
  KMIP_REQUIRE(cfg);
  KMIP_REQUIRE(path);
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw kmip::IoError(std::string("cannot open ") + path);
    std::string line;
    std::size_t lineno = 0;
    kmip_train_config next = *cfg;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw kmip::ParseError(std::string(path) + ":" + std::to_string(lineno) +
                               ": expected key=value");
      }
      try {
        set_key(next, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
      } catch (const kmip::ParameterError& e) {
        throw kmip::ParameterError(std::string(path) + ":" + std::to_string(lineno) + ": " +
                                   e.what());
      }
    }
    *cfg = next;
  });
}

size_t kmip_train_config_key_count(void) { return kNumKeys; }
const char* kmip_train_config_key_name(size_t i) { return i < kNumKeys ? kKeys[i].name : nullptr; }
const char* kmip_train_config_key_help(size_t i) { return i < kNumKeys ? kKeys[i].help : nullptr; }
const char* kmip_train_config_key_default(size_t i) {
  return i < kNumKeys ? kKeys[i].def : nullptr;
}

kmip_status kmip_run_train(const kmip_train_config* cfg, const char* dataset_dir,
                           const char* log_csv, char** summary) {
  KMIP_REQUIRE(cfg);
  KMIP_REQUIRE(dataset_dir);
  if (summary) *summary = nullptr;
  return guarded([&] {
    cfg->train.validate();
    const auto graphs = load_labelled(dataset_dir);
    const auto split = kmip::split_dataset(graphs);
    const kmip::GpsConfig mc = model_for(*cfg, graphs);
    mc.validate();
    kmip::Rng rng(cfg->train.seed);
    kmip::GpsModel model = kmip::GpsModel::random(mc, rng);

    OutStream out(log_csv);
    const auto log = kmip::train(model, split.train, split.val, cfg->train, &out.get());
    out.finish();

    if (summary) {
      nlohmann::ordered_json j;
      j["epochs"] = log.size();
      j["parameters"] = model.parameter_count();
      j["attention"] = kmip::to_string(cfg->train.kind);
      j["final_loss"] = log.empty() ? nlohmann::ordered_json(nullptr)
                                    : nlohmann::ordered_json(log.back().loss);
      j["train_acc"] = kmip::evaluate(model, split.train, cfg->train.kind, cfg->train.tiles);
      j["val_acc"] = kmip::evaluate(model, split.val, cfg->train.kind, cfg->train.tiles);
      j["test_acc"] = kmip::evaluate(model, split.test, cfg->train.kind, cfg->train.tiles);
      *summary = dup_string(j.dump(2) + "\n");
    }
  });
}

kmip_status kmip_run_ksweep(const kmip_ksweep_config* cfg, const kmip_train_config* train,
                            const char* dataset_dir, const char* out_csv) {
  KMIP_REQUIRE(cfg);
  KMIP_REQUIRE(dataset_dir);
  return guarded([&] {
    kmip::KsweepConfig c;
    c.ks = to_vector(cfg->ks, cfg->num_ks);
    c.seeds = to_vector(cfg->seeds, cfg->num_seeds);
    if (train) {
      c.model = train->model;
      c.train = train->train;
    }
    c.train.validate();
    const auto split = kmip::split_dataset(load_labelled(dataset_dir));
    OutStream out(out_csv);
    kmip::run_ksweep(split, c, &out.get());
    out.finish();
  });
}

}  // extern "C"
