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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kmip/gps.hpp"
#include "kmip/graph.hpp"
#include "kmip/train.hpp"

namespace kmip {

// ---- bench -----------------------------------------------------------------

enum class BenchMethod { kFull, kKmipNaive, kKmipTiled };
enum class BenchSetting { kInference, kTraining };

const char* to_string(BenchMethod m);
const char* to_string(BenchSetting s);
BenchMethod bench_method_from_string(const std::string& name);
BenchSetting bench_setting_from_string(const std::string& name);

struct BenchConfig {
  std::vector<std::size_t> ns = {1024};
  std::vector<std::size_t> ks = {10};
  std::vector<std::size_t> dks = {10};
  std::vector<BenchMethod> methods = {BenchMethod::kFull, BenchMethod::kKmipNaive,
                                      BenchMethod::kKmipTiled};
  std::vector<BenchSetting> settings = {BenchSetting::kInference, BenchSetting::kTraining};
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::uint64_t mem_ceiling_bytes = std::uint64_t{8} << 30;

  void validate() const;
};

struct BenchRecord {
  BenchMethod method = BenchMethod::kKmipTiled;
  std::size_t n = 0, k = 0, dk = 0;
  BenchSetting setting = BenchSetting::kInference;
  bool oom_simulated = false;
  double forward_mean = 0, forward_std = 0;
  double backward_mean = 0, backward_std = 0;
  double total_mean = 0, total_std = 0;
  std::uint64_t peak_bytes = 0;  // measured, or the dense requirement when OOM
  std::size_t repeats = 0;
};

// Bytes the dense methods need for their N x N buffers alone: the score
// matrix, plus the cached probabilities and the backward scratch square for
// full attention in training. Zero for the tiled method.
std::uint64_t dense_requirement_bytes(BenchMethod method, std::size_t n,
                                      BenchSetting setting);

void write_bench_header(std::ostream& out);
void write_bench_row(std::ostream& out, const BenchRecord& r);

// Single-head attention with d = d_K = d_V on standard-normal inputs. One
// warmup then `repeats` timed trials per cell; dense cells whose requirement
// exceeds the ceiling are recorded as OOM-simulated without running. Rows
// are streamed to csv as cells finish.
std::vector<BenchRecord> run_bench(const BenchConfig& config, std::ostream* csv = nullptr);

// ---- approx ----------------------------------------------------------------

struct ApproxConfig {
  std::size_t n = 1000;
  std::size_t d = 10;  // d_K = d_V per head
  std::size_t heads = 1;
  std::vector<std::size_t> ks = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  std::size_t instances = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

struct ApproxRecord {
  std::size_t k = 0;
  double l2_mean = 0, l2_std = 0;
  double cum_weight_mean = 0, cum_weight_std = 0;
};

struct ApproxResult {
  std::vector<ApproxRecord> rows;
  // Per instance, per k: mean row L2 distance and mean cumulative weight.
  std::vector<std::vector<double>> l2;
  std::vector<std::vector<double>> cum_weight;
};

void write_approx_header(std::ostream& out);
void write_approx_row(std::ostream& out, const ApproxRecord& r);

// Compares k-MIP with full attention row by row. With no graphs, each
// instance samples Q, K, V from a standard normal; otherwise each graph is an
// instance with Q, K, V = X W for Gaussian W. Heads are concatenated. The
// cumulative weight of a row is the softmax mass, normalized over all N
// keys with the 1/sqrt(d) scaling, of its k highest-scoring keys.
ApproxResult run_approx(const ApproxConfig& config,
                        const std::vector<Graph>* graphs = nullptr);

// ---- gen -------------------------------------------------------------------

enum class DatasetKind { kClusters, kRings };

const char* to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& name);

struct GenConfig {
  DatasetKind kind = DatasetKind::kClusters;
  std::size_t n = 2000;
  std::size_t num_graphs = 20;
  std::size_t knn_k = 10;
  std::size_t dim = 2;
  std::size_t classes = 3;
  double sigma = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

// Clusters: Gaussian blobs around fixed centers on the unit circle of the
// first two coordinates, label = cluster. Rings: concentric rings of radius
// 1, 2, ... with radial noise, label = ring. Points get a directed k-NN
// graph; node features are the coordinates and edge features the distance.
std::vector<Graph> generate_dataset(const GenConfig& config);

// graph_0000.json, graph_0001.json, ... in dir (created if missing).
std::vector<std::filesystem::path> write_dataset(const std::vector<Graph>& graphs,
                                                 const std::filesystem::path& dir);
// All *.json files of dir in name order.
std::vector<Graph> load_dataset(const std::filesystem::path& dir);

struct DatasetSplit {
  std::vector<Graph> train, val, test;
};

// First 70% of the graphs train, next 15% validation, rest test, each part
// non-empty. With fewer than three graphs every part holds all graphs.
DatasetSplit split_dataset(const std::vector<Graph>& graphs);

// ---- ksweep ----------------------------------------------------------------

struct KsweepConfig {
  std::vector<std::size_t> ks = {1, 2, 4, 8, 16, 32, 64};  // 0: full attention
  std::vector<std::uint64_t> seeds = {0};
  GpsConfig model;  // d_in, d_edge_in and classes are taken from the data
  TrainConfig train;
};

struct KsweepRecord {
  std::size_t k = 0;  // 0: full
  std::uint64_t seed = 0;
  double metric = 0;  // test accuracy; NaN when training diverged
  double epoch_s = 0;
};

void write_ksweep_header(std::ostream& out);
void write_ksweep_row(std::ostream& out, const KsweepRecord& r);

// Trains one model per (k, seed) and reports test accuracy and the mean
// epoch time.
std::vector<KsweepRecord> run_ksweep(const DatasetSplit& data, const KsweepConfig& config,
                                     std::ostream* csv = nullptr);

// Number of classes implied by the labels (max label + 1).
std::size_t count_classes(const std::vector<Graph>& graphs);

}  // namespace kmip
