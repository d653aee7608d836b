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

#include "kmip/train.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "kmip/error.hpp"

namespace kmip {

namespace {

const std::vector<int>& labels_of(const Graph& g, std::size_t classes, std::size_t index) {
  if (!g.node_labels()) {
    throw ValidationError("graph " + std::to_string(index) + " has no node labels");
  }
  for (int y : *g.node_labels()) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ValidationError("graph " + std::to_string(index) + " has label " +
                            std::to_string(y) + " outside [0, " + std::to_string(classes) +
                            ")");
    }
  }
  return *g.node_labels();
}

std::size_t argmax_row(const Matrix& m, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < m.cols(); ++c)
    if (m(r, c) > m(r, best)) best = c;
  return best;
}

std::size_t count_correct(const Matrix& logits, const std::vector<int>& labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    hits += argmax_row(logits, i) == static_cast<std::size_t>(labels[i]);
  return hits;
}

struct AdamState {
  std::vector<Matrix> m, v;
};

}  // namespace

LossResult weighted_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                  bool class_weighted) {
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.size() != n) {
    throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  LossResult out{0.0, Matrix(n, c)};
  if (n == 0) return out;
  std::vector<double> weight(c, 1.0);
  if (class_weighted) {
    std::vector<double> counts(c, 0.0);
    for (int y : labels) counts.at(static_cast<std::size_t>(y)) += 1;
    double total = 0;
    for (std::size_t k = 0; k < c; ++k) {
      weight[k] = (static_cast<double>(n) - counts[k]) / static_cast<double>(n);
      total += weight[k] * counts[k];
    }
    if (total == 0.0) weight.assign(c, 1.0);
  }
  double norm = 0;
  for (int y : labels) norm += weight[static_cast<std::size_t>(y)];
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) mx = std::max(mx, logits(i, k));
    double z = 0;
    for (std::size_t k = 0; k < c; ++k) z += std::exp(logits(i, k) - mx);
    const double w = weight[y] / norm;
    out.loss += w * (std::log(z) + mx - logits(i, y));
    for (std::size_t k = 0; k < c; ++k) {
      const double p = std::exp(logits(i, k) - mx) / z;
      out.grad(i, k) = w * (p - (k == y ? 1.0 : 0.0));
    }
  }
  return out;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("accuracy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (labels.empty()) return 0.0;
  return static_cast<double>(count_correct(logits, labels)) /
         static_cast<double>(labels.size());
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("lr must be >= 0");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("adam betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw ParameterError("eps must be > 0");
  tiles.validate();
}

double TrainConfig::lr_at(std::size_t epoch) const {
  if (epoch < warmup_epochs) {
    return lr * static_cast<double>(epoch + 1) / static_cast<double>(warmup_epochs + 1);
  }
  const std::size_t span = epochs > warmup_epochs ? epochs - warmup_epochs : 1;
  const double progress = static_cast<double>(epoch - warmup_epochs) / static_cast<double>(span);
  return lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void write_log_header(std::ostream& out) {
  out << "epoch,loss,train_acc,val_acc,epoch_seconds\n";
}

void write_log_row(std::ostream& out, const EpochRecord& r) {
  std::ostringstream line;
  line << std::setprecision(10) << r.epoch << ',' << r.loss << ',' << r.train_acc << ',';
  if (std::isnan(r.val_acc)) {
    line << "nan";
  } else {
    line << r.val_acc;
  }
  line << ',' << r.epoch_seconds << '\n';
  out << line.str() << std::flush;
}

std::vector<EpochRecord> train(GpsModel& model, const std::vector<Graph>& train_graphs,
                               const std::vector<Graph>& val_graphs,
                               const TrainConfig& config, std::ostream* log) {
  config.validate();
  const std::size_t classes = model.config.classes;
  std::vector<Matrix> inputs;
  for (std::size_t i = 0; i < train_graphs.size(); ++i) {
    labels_of(train_graphs[i], classes, i);
    inputs.push_back(model_inputs(train_graphs[i], model.config.pe));
    if (!all_finite(inputs.back()) || !all_finite(train_graphs[i].edge_features())) {
      throw NonFiniteError("training graph " + std::to_string(i) +
                           " has non-finite node or edge features");
    }
  }
  for (std::size_t i = 0; i < val_graphs.size(); ++i) labels_of(val_graphs[i], classes, i);

  if (log) write_log_header(*log);
  Rng order_rng = Rng(config.seed).derive(1);
  Rng dropout_rng = Rng(config.seed).derive(2);
  ForwardOptions opts;
  opts.kind = config.kind;
  opts.tiles = config.tiles;
  opts.training = true;
  opts.rng = &dropout_rng;

  AdamState adam;
  model.for_each([&](const Matrix& p) {
    adam.m.emplace_back(p.rows(), p.cols());
    adam.v.emplace_back(p.rows(), p.cols());
  });
  std::size_t step = 0;
  std::vector<std::size_t> order(train_graphs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochRecord> records;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = config.lr_at(epoch);
    shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0;
    std::size_t hits = 0, seen = 0;
    for (std::size_t gi : order) {
      const Graph& g = train_graphs[gi];
      const auto& labels = *g.node_labels();
      Workspace ws;
      ModelOutput fwd;
      try {
        fwd = model_forward(inputs[gi], g, model, opts, ws);
      } catch (const DomainError& e) {
        // Diverged activations surface as softmax rows without finite entries.
        throw NonFiniteError("forward pass failed at epoch " + std::to_string(epoch + 1) +
                             " on training graph " + std::to_string(gi) + ": " + e.what());
      }
      LossResult loss = weighted_cross_entropy(fwd.logits, labels, config.class_weighted);
      if (!std::isfinite(loss.loss)) {
        throw NonFiniteError("non-finite loss " + std::to_string(loss.loss) + " at epoch " +
                             std::to_string(epoch + 1) + " on training graph " +
                             std::to_string(gi) + " (lr " + std::to_string(lr) + ")");
      }
      loss_sum += loss.loss;
      hits += count_correct(fwd.logits, labels);
      seen += labels.size();
      GpsModel grad = model_backward(*fwd.tape, g, model, loss.grad, ws);
      fwd.tape.reset();

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      std::vector<Matrix*> grads;
      grad.for_each([&](Matrix& m) { grads.push_back(&m); });
      std::size_t slot = 0;
      model.for_each([&](Matrix& p) {
        const Matrix& gm = *grads[slot];
        Matrix& m = adam.m[slot];
        Matrix& v = adam.v[slot];
        ++slot;
        if (!all_finite(gm)) {
          throw NonFiniteError("non-finite gradient at epoch " + std::to_string(epoch + 1) +
                               " on training graph " + std::to_string(gi));
        }
        if (lr == 0.0) return;
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double gv = gm.data()[i];
          double& mi = m.data()[i];
          double& vi = v.data()[i];
          mi = config.beta1 * mi + (1 - config.beta1) * gv;
          vi = config.beta2 * vi + (1 - config.beta2) * gv * gv;
          double& w = p.data()[i];
          w -= lr * config.weight_decay * w;
          w -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + config.eps);
        }
      });
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    rec.train_acc = seen ? static_cast<double>(hits) / static_cast<double>(seen) : 0.0;
    rec.val_acc = val_graphs.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : evaluate(model, val_graphs, config.kind, config.tiles);
    rec.epoch_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (log) write_log_row(*log, rec);
    records.push_back(rec);
  }
  return records;
}

double evaluate(const GpsModel& model, const std::vector<Graph>& graphs,
                AttentionKind kind, const TileConfig& tiles) {
  ForwardOptions opts;
  opts.kind = kind;
  opts.tiles = tiles;
  std::size_t hits = 0, seen = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& labels = labels_of(graphs[i], model.config.classes, i);
    Workspace ws;
    hits += count_correct(model_forward(graphs[i], model, opts, ws).logits, labels);
    seen += labels.size();
  }
  return seen ? static_cast<double>(hits) / static_cast<double>(seen) : 0.0;
}

}  // namespace kmip
