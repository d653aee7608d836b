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

#include "kmip/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "kmip/error.hpp"

namespace kmip {

namespace {

struct Stats {
  double mean = 0, std = 0;
};

// Mean and sample standard deviation (zero for a single value).
Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw ParameterError(std::string(what) + " must be positive");
}

void require_positive(const std::vector<std::size_t>& vs, const char* what) {
  if (vs.empty()) throw ParameterError(std::string(what) + " must not be empty");
  for (std::size_t v : vs) require_positive(v, what);
}

// Attention parameters that read Q, K and V verbatim from column blocks of
// the input [Q_1..Q_H | K_1..K_H | V_1..V_H] and write head h into output
// block h (so heads are concatenated).
AttentionParams<double> selector_params(std::size_t d, std::size_t heads, std::size_t k) {
  AttentionParams<double> p;
  p.d_model = 3 * d * heads;
  p.d_k = p.d_v = d;
  p.k = k;
  for (std::size_t h = 0; h < heads; ++h) {
    HeadWeights<double> w{Matrix(p.d_model, d), Matrix(p.d_model, d), Matrix(p.d_model, d),
                          Matrix(d, p.d_model)};
    for (std::size_t t = 0; t < d; ++t) {
      w.w_q(h * d + t, t) = 1;
      w.w_k((heads + h) * d + t, t) = 1;
      w.w_v((2 * heads + h) * d + t, t) = 1;
      w.w_o(t, h * d + t) = 1;
    }
    p.heads.push_back(std::move(w));
  }
  return p;
}

}  // namespace

// ---- bench -----------------------------------------------------------------

const char* to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::kFull: return "full";
    case BenchMethod::kKmipNaive: return "kmip_naive";
    case BenchMethod::kKmipTiled: return "kmip_tiled";
  }
  return "?";
}

const char* to_string(BenchSetting s) {
  return s == BenchSetting::kInference ? "inference" : "training";
}

BenchMethod bench_method_from_string(const std::string& name) {
  if (name == "full") return BenchMethod::kFull;
  if (name == "kmip_naive") return BenchMethod::kKmipNaive;
  if (name == "kmip_tiled") return BenchMethod::kKmipTiled;
  throw ParameterError("unknown method '" + name + "' (expected full, kmip_naive or kmip_tiled)");
}

BenchSetting bench_setting_from_string(const std::string& name) {
  if (name == "inference") return BenchSetting::kInference;
  if (name == "training") return BenchSetting::kTraining;
  throw ParameterError("unknown setting '" + name + "' (expected inference or training)");
}

void BenchConfig::validate() const {
  require_positive(ns, "N");
  require_positive(ks, "k");
  require_positive(dks, "d_K");
  require_positive(repeats, "repeats");
  require_positive(threads, "threads");
  if (methods.empty()) throw ParameterError("no methods selected");
  if (settings.empty()) throw ParameterError("no settings selected");
}

std::uint64_t dense_requirement_bytes(BenchMethod method, std::size_t n,
                                      BenchSetting setting) {
  const std::uint64_t square = std::uint64_t{n} * n * sizeof(double);
  switch (method) {
    case BenchMethod::kFull: return setting == BenchSetting::kTraining ? 2 * square : square;
    case BenchMethod::kKmipNaive: return square;
    case BenchMethod::kKmipTiled: return 0;
  }
  return 0;
}

void write_bench_header(std::ostream& out) {
  out << "method,N,k,dK,setting,forward_s_mean,forward_s_std,backward_s_mean,"
         "backward_s_std,total_s_mean,total_s_std,peak_bytes,repeats\n";
}

void write_bench_row(std::ostream& out, const BenchRecord& r) {
  std::ostringstream line;
  line << to_string(r.method) << ',' << r.n << ',' << r.k << ',' << r.dk << ','
       << to_string(r.setting) << ',';
  if (r.oom_simulated) {
    for (int i = 0; i < 6; ++i) line << "OOM-simulated,";
  } else {
    for (double v : {r.forward_mean, r.forward_std, r.backward_mean, r.backward_std,
                     r.total_mean, r.total_std})
      line << fmt(v) << ',';
  }
  line << r.peak_bytes << ',' << r.repeats << '\n';
  out << line.str() << std::flush;
}

std::vector<BenchRecord> run_bench(const BenchConfig& config, std::ostream* csv) {
  config.validate();
  if (csv) write_bench_header(*csv);
  std::vector<BenchRecord> records;
  TileConfig tiles;
  tiles.threads = config.threads;
  for (std::size_t n : config.ns) {
    for (std::size_t dk : config.dks) {
      Rng rng = Rng(config.seed).derive(n * 1000003 + dk);
      const Matrix x = random_normal(n, dk, rng);
      AttentionParams<double> p = AttentionParams<double>::random(dk, 1, dk, dk, 1, rng);
      const Matrix grad_y = random_normal(n, dk, rng);
      for (std::size_t k : config.ks) {
        p.k = k;
        for (BenchMethod method : config.methods) {
          for (BenchSetting setting : config.settings) {
            BenchRecord r;
            r.method = method;
            r.n = n;
            r.k = k;
            r.dk = dk;
            r.setting = setting;
            r.repeats = config.repeats;
            const std::uint64_t need = dense_requirement_bytes(method, n, setting);
            if (need > config.mem_ceiling_bytes) {
              r.oom_simulated = true;
              r.peak_bytes = need;
            } else {
              std::vector<double> fwd, bwd, tot;
              for (std::size_t trial = 0; trial <= config.repeats; ++trial) {
                Workspace ws;
                const auto t0 = std::chrono::steady_clock::now();
                AttentionOutput<double> out =
                    method == BenchMethod::kFull        ? full_attention_forward(x, p, ws)
                    : method == BenchMethod::kKmipNaive ? kmip_naive_attention_forward(x, p, ws)
                                                        : kmip_attention_forward(x, p, tiles, ws);
                const double f = seconds_since(t0);
                double b = 0;
                if (setting == BenchSetting::kTraining) {
                  const auto t1 = std::chrono::steady_clock::now();
                  auto g = attention_backward(out.tape, x, p, grad_y, ws);
                  b = seconds_since(t1);
                }
                if (trial == 0) continue;  // warmup
                fwd.push_back(f);
                bwd.push_back(b);
                tot.push_back(f + b);
                r.peak_bytes = std::max<std::uint64_t>(r.peak_bytes, ws.peak_bytes());
              }
              const Stats sf = stats(fwd), sb = stats(bwd), st = stats(tot);
              r.forward_mean = sf.mean;
              r.forward_std = sf.std;
              r.backward_mean = sb.mean;
              r.backward_std = sb.std;
              r.total_mean = st.mean;
              r.total_std = st.std;
            }
            if (csv) write_bench_row(*csv, r);
            records.push_back(r);
          }
        }
      }
    }
  }
  return records;
}

// ---- approx ----------------------------------------------------------------

void ApproxConfig::validate() const {
  require_positive(n, "N");
  require_positive(d, "d");
  require_positive(heads, "heads");
  require_positive(ks, "k");
  require_positive(instances, "instances");
  require_positive(threads, "threads");
}

void write_approx_header(std::ostream& out) {
  out << "k,l2_mean,l2_std,cum_weight_mean,cum_weight_std\n";
}

void write_approx_row(std::ostream& out, const ApproxRecord& r) {
  out << r.k << ',' << fmt(r.l2_mean) << ',' << fmt(r.l2_std) << ','
      << fmt(r.cum_weight_mean) << ',' << fmt(r.cum_weight_std) << '\n';
}

ApproxResult run_approx(const ApproxConfig& config, const std::vector<Graph>* graphs) {
  config.validate();
  const std::size_t instances = graphs ? graphs->size() : config.instances;
  if (instances == 0) throw ParameterError("approx needs at least one graph");
  const std::size_t d = config.d, heads = config.heads;
  TileConfig tiles;
  tiles.threads = config.threads;

  ApproxResult res;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    Rng rng = Rng(config.seed).derive(inst);
    Matrix qkv;
    if (graphs) {
      const Matrix& feats = (*graphs)[inst].node_features();
      if (feats.cols() == 0) throw ValidationError("approx: graph has no node features");
      qkv = matmul(feats, random_normal(feats.cols(), 3 * d * heads, rng,
                                        1.0 / std::sqrt(static_cast<double>(feats.cols()))));
    } else {
      qkv = random_normal(config.n, 3 * d * heads, rng);
    }
    const std::size_t n = qkv.rows();
    AttentionParams<double> p = selector_params(d, heads, n);
    Workspace ws;
    const auto full = full_attention_forward(qkv, p, ws);

    // Per row of every head: softmax weights sorted descending and their
    // prefix sums, so that the k = N entry equals the normalizer exactly.
    std::vector<std::vector<double>> prefix(heads * n);
    for (std::size_t h = 0; h < heads; ++h) {
      const Matrix& probs = full.tape.heads[h].probs;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> w(probs.row(i).begin(), probs.row(i).end());
        std::sort(w.begin(), w.end(), std::greater<>());
        auto& pre = prefix[h * n + i];
        pre.resize(n);
        double s = 0;
        for (std::size_t j = 0; j < n; ++j) pre[j] = s += w[j];
      }
    }

    std::vector<double> l2_row, cum_row;
    for (std::size_t k : config.ks) {
      const std::size_t keff = std::min(k, n);
      p.k = keff;
      const Matrix y = kmip_attention_forward(qkv, p, tiles, ws).y;
      double l2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t c = 0; c < y.cols(); ++c) s += std::pow(y(i, c) - full.y(i, c), 2);
        l2 += std::sqrt(s);
      }
      l2_row.push_back(l2 / static_cast<double>(n));
      double cum = 0;
      for (const auto& pre : prefix) cum += pre[keff - 1] / pre[n - 1];
      cum_row.push_back(cum / static_cast<double>(prefix.size()));
    }
    res.l2.push_back(std::move(l2_row));
    res.cum_weight.push_back(std::move(cum_row));
  }
  for (std::size_t ki = 0; ki < config.ks.size(); ++ki) {
    std::vector<double> l2, cum;
    for (std::size_t inst = 0; inst < instances; ++inst) {
      l2.push_back(res.l2[inst][ki]);
      cum.push_back(res.cum_weight[inst][ki]);
    }
    const Stats sl = stats(l2), sc = stats(cum);
    res.rows.push_back({config.ks[ki], sl.mean, sl.std, sc.mean, sc.std});
  }
  return res;
}

// ---- gen -------------------------------------------------------------------

const char* to_string(DatasetKind k) { return k == DatasetKind::kClusters ? "clusters" : "rings"; }

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "clusters") return DatasetKind::kClusters;
  if (name == "rings") return DatasetKind::kRings;
  throw ParameterError("unknown dataset kind '" + name + "' (expected clusters or rings)");
}

void GenConfig::validate() const {
  require_positive(num_graphs, "num_graphs");
  require_positive(knn_k, "knn_k");
  require_positive(classes, "classes");
  if (dim != 2 && dim != 3) throw ParameterError("dim must be 2 or 3");
  if (!(sigma >= 0.0)) throw ParameterError("sigma must be >= 0");
  if (n <= knn_k) {
    throw ParameterError("N (" + std::to_string(n) + ") must exceed knn_k (" +
                         std::to_string(knn_k) + ")");
  }
}

std::vector<Graph> generate_dataset(const GenConfig& config) {
  config.validate();
  std::vector<Graph> graphs;
  for (std::size_t gi = 0; gi < config.num_graphs; ++gi) {
    Rng rng = Rng(config.seed).derive(gi);
    Matrix pts(config.n, config.dim);
    std::vector<int> labels(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
      const std::size_t c = i % config.classes;
      labels[i] = static_cast<int>(c);
      if (config.kind == DatasetKind::kClusters) {
        const double angle = 2 * std::numbers::pi * static_cast<double>(c) /
                             static_cast<double>(config.classes);
        for (std::size_t t = 0; t < config.dim; ++t) {
          const double center = t == 0 ? std::cos(angle) : t == 1 ? std::sin(angle) : 0.0;
          pts(i, t) = center + config.sigma * rng.normal();
        }
      } else {
        const double radius = static_cast<double>(c + 1) + config.sigma * rng.normal();
        const double angle = rng.uniform(0.0, 2 * std::numbers::pi);
        pts(i, 0) = radius * std::cos(angle);
        pts(i, 1) = radius * std::sin(angle);
        if (config.dim == 3) pts(i, 2) = config.sigma * rng.normal();
      }
    }
    graphs.push_back(knn_graph(pts, config.knn_k).with_labels(std::move(labels)));
  }
  return graphs;
}

std::vector<std::filesystem::path> write_dataset(const std::vector<Graph>& graphs,
                                                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    std::ostringstream name;
    name << "graph_" << std::setw(4) << std::setfill('0') << i << ".json";
    paths.push_back(dir / name.str());
    save_graph(graphs[i], paths.back());
  }
  return paths;
}

std::vector<Graph> load_dataset(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("dataset directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no .json graphs in " + dir.string());
  std::vector<Graph> graphs;
  for (const auto& f : files) graphs.push_back(load_graph(f));
  return graphs;
}

DatasetSplit split_dataset(const std::vector<Graph>& graphs) {
  DatasetSplit s;
  const std::size_t n = graphs.size();
  if (n < 3) {
    s.train = s.val = s.test = graphs;
    return s;
  }
  std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.7 * n)));
  std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.15 * n)));
  n_train = std::min(n_train, n - 2);
  n_val = std::min(n_val, n - n_train - 1);
  s.train.assign(graphs.begin(), graphs.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(graphs.begin() + static_cast<std::ptrdiff_t>(n_train),
               graphs.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(graphs.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), graphs.end());
  return s;
}

// ---- ksweep ----------------------------------------------------------------

std::size_t count_classes(const std::vector<Graph>& graphs) {
  int hi = -1;
  for (const auto& g : graphs) {
    if (!g.node_labels()) throw ValidationError("graph without node labels");
    for (int y : *g.node_labels()) hi = std::max(hi, y);
  }
  if (hi < 0) throw ValidationError("dataset has no labelled nodes");
  return static_cast<std::size_t>(hi) + 1;
}

void write_ksweep_header(std::ostream& out) { out << "k,seed,metric,epoch_s\n"; }

void write_ksweep_row(std::ostream& out, const KsweepRecord& r) {
  std::ostringstream line;
  if (r.k == 0) {
    line << "full";
  } else {
    line << r.k;
  }
  line << ',' << r.seed << ',';
  if (std::isnan(r.metric)) {
    line << "nan";
  } else {
    line << fmt(r.metric);
  }
  line << ',' << fmt(r.epoch_s) << '\n';
  out << line.str() << std::flush;
}

std::vector<KsweepRecord> run_ksweep(const DatasetSplit& data, const KsweepConfig& config,
                                     std::ostream* csv) {
  if (data.train.empty() || data.test.empty()) {
    throw ValidationError("ksweep needs training and test graphs");
  }
  if (config.ks.empty() || config.seeds.empty()) {
    throw ParameterError("ksweep needs at least one k and one seed");
  }
  GpsConfig mc = config.model;
  mc.d_in = data.train.front().feature_dim();
  mc.d_edge_in = data.train.front().edge_dim();
  std::vector<Graph> all = data.train;
  all.insert(all.end(), data.test.begin(), data.test.end());
  mc.classes = std::max(mc.classes, count_classes(all));

  if (csv) write_ksweep_header(*csv);
  std::vector<KsweepRecord> records;
  for (std::size_t k : config.ks) {
    for (std::uint64_t seed : config.seeds) {
      GpsConfig cell = mc;
      TrainConfig tc = config.train;
      tc.seed = seed;
      tc.kind = k == 0 ? AttentionKind::kFull : AttentionKind::kKmip;
      cell.k = k == 0 ? 1 : k;
      Rng rng(seed);
      GpsModel model = GpsModel::random(cell, rng);
      KsweepRecord r{k, seed, std::numeric_limits<double>::quiet_NaN(), 0.0};
      try {
        const auto log = train(model, data.train, data.val, tc);
        double total = 0;
        for (const auto& e : log) total += e.epoch_seconds;
        r.epoch_s = log.empty() ? 0.0 : total / static_cast<double>(log.size());
        r.metric = evaluate(model, data.test, tc.kind, tc.tiles);
      } catch (const NonFiniteError&) {
        // Diverged cells keep a NaN metric.
      }
      if (csv) write_ksweep_row(*csv, r);
      records.push_back(r);
    }
  }
  return records;
}

}  // namespace kmip
