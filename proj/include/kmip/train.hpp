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
#include <ostream>
#include <vector>

#include "kmip/gps.hpp"

namespace kmip {

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};

// Mean cross-entropy over nodes. With class weighting each node counts with
// weight (V - n_c) / V, V the number of nodes and n_c the size of its class,
// normalized by the total weight; if every weight is zero (a single class),
// all nodes count equally.
LossResult weighted_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                  bool class_weighted = true);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Matrix& logits, const std::vector<int>& labels);

struct TrainConfig {
  std::size_t epochs = 100;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::size_t warmup_epochs = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool class_weighted = true;
  std::uint64_t seed = 0;
  AttentionKind kind = AttentionKind::kKmip;
  TileConfig tiles;

  void validate() const;
  // Linear warmup over warmup_epochs, then cosine decay to zero.
  double lr_at(std::size_t epoch) const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;  // NaN without validation graphs
  double epoch_seconds = 0.0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochRecord& r);

// AdamW with one step per training graph, graphs visited in a seeded random
// order each epoch. Training accuracy is the running accuracy of the
// epoch's forward passes. Rows are appended to `log` as epochs finish.
// Throws NonFiniteError if a loss or gradient stops being finite.
std::vector<EpochRecord> train(GpsModel& model, const std::vector<Graph>& train_graphs,
                               const std::vector<Graph>& val_graphs,
                               const TrainConfig& config, std::ostream* log = nullptr);

// Node-level accuracy pooled over all graphs.
double evaluate(const GpsModel& model, const std::vector<Graph>& graphs,
                AttentionKind kind, const TileConfig& tiles = {});

}  // namespace kmip
