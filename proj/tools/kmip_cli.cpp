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

// kmip command-line front end. Links only the C interface.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kmip/kmip.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::uint64_t mem_ceiling_bytes = std::uint64_t{8} << 30;
  std::string out = "-";
};

int report(kmip_status s) {
  if (s == KMIP_OK) return kExitOk;
  std::cerr << "kmip: " << kmip_status_name(s) << ": " << kmip_last_error() << "\n";
  switch (s) {
    case KMIP_ERR_SHAPE:
    case KMIP_ERR_PARAMETER:
    case KMIP_ERR_PARSE:
    case KMIP_ERR_VALIDATION:
    case KMIP_ERR_SCHEME:
    case KMIP_ERR_IO:
    case KMIP_ERR_NULL_ARGUMENT:
      return kExitUsage;
    default:
      return kExitInternal;
  }
}

bool write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return static_cast<bool>(std::cout.flush());
  }
  std::ofstream f(path, std::ios::trunc);
  f << text;
  return static_cast<bool>(f.flush());
}

// Holds a train config handle built from --config, --set and the globals.
class TrainOptions {
 public:
  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_file_, "File of key=value training options")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", sets_, "Training option override, key=value (repeatable)");
  }

  // Returns a status; on success *out owns a new handle.
  kmip_status build(const Globals& g, kmip_train_config** out) const {
    kmip_train_config* cfg = nullptr;
    kmip_status s = kmip_train_config_create(&cfg);
    if (s != KMIP_OK) return s;
    const std::string threads = std::to_string(g.threads);
    s = kmip_train_config_set(cfg, "threads", threads.c_str());
    if (s == KMIP_OK && !config_file_.empty()) s = kmip_train_config_load(cfg, config_file_.c_str());
    for (std::size_t i = 0; s == KMIP_OK && i < sets_.size(); ++i) {
      const auto eq = sets_[i].find('=');
      if (eq == std::string::npos) {
        kmip_train_config_destroy(cfg);
        std::cerr << "kmip: --set expects key=value, got '" << sets_[i] << "'\n";
        return KMIP_ERR_PARAMETER;
      }
      s = kmip_train_config_set(cfg, sets_[i].substr(0, eq).c_str(),
                                sets_[i].substr(eq + 1).c_str());
    }
    if (s == KMIP_OK && g.seed) {
      const std::string seed = std::to_string(*g.seed);
      s = kmip_train_config_set(cfg, "seed", seed.c_str());
    }
    if (s != KMIP_OK) {
      kmip_train_config_destroy(cfg);
      return s;
    }
    *out = cfg;
    return KMIP_OK;
  }

 private:
  std::string config_file_;
  std::vector<std::string> sets_;
};

std::string option_table() {
  std::string out = "Training options (key=value):\n";
  for (std::size_t i = 0; i < kmip_train_config_key_count(); ++i) {
    std::string line = "  ";
    line += kmip_train_config_key_name(i);
    line.resize(18, ' ');
    line += kmip_train_config_key_help(i);
    line += " [";
    line += kmip_train_config_key_default(i);
    line += "]\n";
    out += line;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-MIP attention toolkit: benchmarks, approximation and WL studies, training"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kmip_version());

  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Random seed (default 0)");
  app.add_option("--threads", g.threads, "Worker threads for the top-k kernel")
      ->check(CLI::PositiveNumber);
  app.add_option("--mem-ceiling-bytes", g.mem_ceiling_bytes,
                 "Dense methods needing more than this are recorded as OOM-simulated");
  app.add_option("--out", g.out, "Output file (- for stdout); output directory for gen");

  // bench
  auto* bench = app.add_subcommand("bench", "Time full, naive k-MIP and tiled k-MIP attention");
  std::vector<std::size_t> bench_ns{1024}, bench_ks{10}, bench_dks{10};
  std::string bench_methods = "full,kmip_naive,kmip_tiled", bench_settings = "inference,training";
  std::size_t bench_repeats = 5;
  bench->add_option("--n", bench_ns, "Node counts")->delimiter(',');
  bench->add_option("--k", bench_ks, "Keys per query")->delimiter(',');
  bench->add_option("--dk", bench_dks, "Model width (d = d_K = d_V)")->delimiter(',');
  bench->add_option("--methods", bench_methods, "Comma list of full,kmip_naive,kmip_tiled");
  bench->add_option("--settings", bench_settings, "Comma list of inference,training");
  bench->add_option("--repeats", bench_repeats, "Timed trials per cell after one warmup");

  // approx
  auto* approx = app.add_subcommand("approx", "Compare k-MIP with full attention as k varies");
  kmip_approx_config approx_cfg;
  kmip_approx_config_defaults(&approx_cfg);
  std::vector<std::size_t> approx_ks(approx_cfg.ks, approx_cfg.ks + approx_cfg.num_ks);
  std::string approx_graphs;
  approx->add_option("--n", approx_cfg.n, "Nodes per random instance");
  approx->add_option("--d", approx_cfg.d, "Query/key/value width per head");
  approx->add_option("--heads", approx_cfg.heads, "Attention heads");
  approx->add_option("--k", approx_ks, "Values of k")->delimiter(',');
  approx->add_option("--instances", approx_cfg.instances, "Random instances");
  approx->add_option("--graphs", approx_graphs, "Dataset directory (instead of random inputs)")
      ->check(CLI::ExistingDirectory);

  // ksweep
  auto* ksweep = app.add_subcommand("ksweep", "Train GPS models for a range of k");
  std::string ksweep_data;
  std::vector<std::string> ksweep_ks{"1", "2", "4", "8", "16", "32", "64"};
  std::vector<std::uint64_t> ksweep_seeds;
  ksweep->add_option("--data", ksweep_data, "Dataset directory from gen")
      ->required()
      ->check(CLI::ExistingDirectory);
  ksweep->add_option("--k", ksweep_ks, "Values of k; 'full' for full attention")->delimiter(',');
  ksweep->add_option("--seeds", ksweep_seeds, "Training seeds (default: --seed)")->delimiter(',');
  TrainOptions ksweep_train;
  ksweep_train.add_to(ksweep);

  // gen
  auto* gen = app.add_subcommand("gen", "Write a synthetic labelled point-cloud dataset to --out");
  kmip_gen_config gen_cfg;
  kmip_gen_config_defaults(&gen_cfg);
  std::string gen_kind = gen_cfg.kind;
  gen->add_option("--kind", gen_kind, "clusters or rings");
  gen->add_option("--n", gen_cfg.n, "Points per graph");
  gen->add_option("--num-graphs", gen_cfg.num_graphs, "Graphs");
  gen->add_option("--knn-k", gen_cfg.knn_k, "Neighbours per node");
  gen->add_option("--dim", gen_cfg.dim, "Point dimension (2 or 3)");
  gen->add_option("--classes", gen_cfg.classes, "Classes");
  gen->add_option("--sigma", gen_cfg.sigma, "Noise scale");

  // wl
  auto* wl = app.add_subcommand("wl", "Test whether a WL variant distinguishes two graphs");
  std::string wl_a, wl_b, wl_scheme;
  std::size_t wl_iters = 12;
  double wl_quantum = 1e-8;
  wl->add_option("graph_a", wl_a, "First graph (JSON)")->required();
  wl->add_option("graph_b", wl_b, "Second graph (JSON)")->required();
  wl->add_option("scheme", wl_scheme,
                 "wl1, constant, lap_pe[:m], rwse[:m], gps, gps:lap_pe[:m], gps:rwse[:m]")
      ->required();
  wl->add_option("--max-iters", wl_iters, "Refinement iterations");
  wl->add_option("--quantum", wl_quantum, "Rounding step for real-valued encodings")
      ->check(CLI::PositiveNumber);

  // train
  auto* train = app.add_subcommand("train", "Train a GPS model and log per-epoch metrics");
  std::string train_data, train_summary;
  bool list_options = false;
  train->add_option("--data", train_data, "Dataset directory from gen")
      ->check(CLI::ExistingDirectory);
  train->add_option("--summary", train_summary, "Write the final JSON summary here (default stderr)");
  train->add_flag("--list-options", list_options, "Print the training options and exit");
  TrainOptions train_opts;
  train_opts.add_to(train);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed_value;
  const std::uint64_t seed = g.seed.value_or(0);

  if (bench->parsed()) {
    kmip_bench_config c;
    kmip_bench_config_defaults(&c);
    c.ns = bench_ns.data();
    c.num_ns = bench_ns.size();
    c.ks = bench_ks.data();
    c.num_ks = bench_ks.size();
    c.dks = bench_dks.data();
    c.num_dks = bench_dks.size();
    c.methods = bench_methods.c_str();
    c.settings = bench_settings.c_str();
    c.repeats = bench_repeats;
    c.seed = seed;
    c.threads = g.threads;
    c.mem_ceiling_bytes = g.mem_ceiling_bytes;
    const int rc = report(kmip_run_bench(&c, g.out.c_str()));
    if (rc != kExitOk || g.out == "-") return rc;
    nlohmann::ordered_json meta;
    meta["command"] = "bench";
    meta["version"] = kmip_version();
    meta["seed"] = seed;
    meta["threads"] = g.threads;
    meta["mem_ceiling_bytes"] = g.mem_ceiling_bytes;
    meta["repeats"] = bench_repeats;
    meta["n"] = bench_ns;
    meta["k"] = bench_ks;
    meta["dk"] = bench_dks;
    meta["methods"] = bench_methods;
    meta["settings"] = bench_settings;
    if (!write_text(g.out + ".meta.json", meta.dump(2) + "\n")) {
      std::cerr << "kmip: cannot write " << g.out << ".meta.json\n";
      return kExitUsage;
    }
    return kExitOk;
  }

  if (approx->parsed()) {
    approx_cfg.ks = approx_ks.data();
    approx_cfg.num_ks = approx_ks.size();
    approx_cfg.seed = seed;
    approx_cfg.threads = g.threads;
    approx_cfg.graphs_dir = approx_graphs.empty() ? nullptr : approx_graphs.c_str();
    return report(kmip_run_approx(&approx_cfg, g.out.c_str()));
  }

  if (ksweep->parsed()) {
    std::vector<std::size_t> ks;
    for (const auto& k : ksweep_ks) {
      if (k == "full") {
        ks.push_back(0);
        continue;
      }
      try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(k, &pos);
        if (pos != k.size() || v == 0 || k[0] == '-') throw std::invalid_argument(k);
        ks.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        std::cerr << "kmip: --k expects positive integers or 'full', got '" << k << "'\n";
        return kExitUsage;
      }
    }
    if (ksweep_seeds.empty()) ksweep_seeds.push_back(seed);
    kmip_train_config* tc = nullptr;
    if (const int rc = report(ksweep_train.build(g, &tc)); rc != kExitOk) return rc;
    kmip_ksweep_config c{ks.data(), ks.size(), ksweep_seeds.data(), ksweep_seeds.size()};
    const int rc = report(kmip_run_ksweep(&c, tc, ksweep_data.c_str(), g.out.c_str()));
    kmip_train_config_destroy(tc);
    return rc;
  }

  if (gen->parsed()) {
    if (g.out == "-") {
      std::cerr << "kmip: gen needs --out <directory>\n";
      return kExitUsage;
    }
    gen_cfg.kind = gen_kind.c_str();
    gen_cfg.seed = seed;
    return report(kmip_run_gen(&gen_cfg, g.out.c_str()));
  }

  if (wl->parsed()) {
    kmip_graph* a = nullptr;
    kmip_graph* b = nullptr;
    int rc = report(kmip_graph_load(wl_a.c_str(), &a));
    if (rc == kExitOk) rc = report(kmip_graph_load(wl_b.c_str(), &b));
    char* json = nullptr;
    if (rc == kExitOk) {
      rc = report(kmip_wl_distinguish(a, b, wl_scheme.c_str(), wl_iters, wl_quantum, nullptr,
                                      nullptr, &json));
    }
    if (rc == kExitOk && !write_text(g.out, json)) {
      std::cerr << "kmip: cannot write " << g.out << "\n";
      rc = kExitUsage;
    }
    kmip_string_free(json);
    kmip_graph_destroy(a);
    kmip_graph_destroy(b);
    return rc;
  }

  if (train->parsed()) {
    if (list_options) {
      std::cout << option_table();
      return kExitOk;
    }
    if (train_data.empty()) {
      std::cerr << "kmip: train needs --data <directory>\n";
      return kExitUsage;
    }
    kmip_train_config* tc = nullptr;
    if (const int rc = report(train_opts.build(g, &tc)); rc != kExitOk) return rc;
    char* summary = nullptr;
    int rc = report(kmip_run_train(tc, train_data.c_str(), g.out.c_str(), &summary));
    if (rc == kExitOk) {
      if (train_summary.empty()) {
        std::cerr << summary;
      } else if (!write_text(train_summary, summary)) {
        std::cerr << "kmip: cannot write " << train_summary << "\n";
        rc = kExitUsage;
      }
    }
    kmip_string_free(summary);
    kmip_train_config_destroy(tc);
    return rc;
  }
  return kExitUsage;
}
