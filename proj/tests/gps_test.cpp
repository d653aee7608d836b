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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kmip/gps.hpp"
#include "kmip/train.hpp"
#include "oracles.hpp"

namespace kmip {
namespace {

Graph with_random_edge_features(const Graph& g, std::size_t d, Rng& rng) {
  return Graph(g.num_nodes(), g.node_features(), g.edges(),
               random_normal(g.num_edges(), d, rng), g.node_labels());
}

Graph random_featured_graph(std::size_t n, double p, std::size_t d, std::size_t d_edge,
                            Rng& rng) {
  Graph g = oracle::random_digraph(n, p, rng);
  g = g.with_node_features(random_normal(n, d, rng));
  return with_random_edge_features(g, d_edge, rng);
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(perm[i], j);
  return out;
}

GpsLayerParams zero_layer(std::size_t d, std::size_t k) {
  Rng rng(0);
  GpsLayerParams p = GpsLayerParams::random(d, 2, 3, 3, k, 2 * d, rng);
  p.layer_norm = false;
  GpsLayerParams::visit(p, [](Matrix& m) { m.fill(0.0); });
  return p;
}

TEST(Mpnn, ZeroWeightsAreIdentity) {
  Rng rng(1);
  Graph g = random_featured_graph(7, 0.3, 4, 4, rng);
  MpnnWeights w = MpnnWeights::random(4, rng).zeros_like();
  auto out = mpnn_forward(g.node_features(), g, g.edge_features(), w);
  EXPECT_EQ(out.x, g.node_features());
  EXPECT_EQ(out.e, g.edge_features());
}

TEST(Mpnn, IsolatedNodeSeesOnlyItself) {
  Rng rng(2);
  Graph g(3, random_normal(3, 3, rng), {{0, 1}, {1, 0}, {2, 0}}, random_normal(3, 3, rng));
  MpnnWeights w = MpnnWeights::random(3, rng);
  auto out = mpnn_forward(g.node_features(), g, g.edge_features(), w);
  // Node 2 has no in-edges.
  Matrix x2(1, 3);
  for (std::size_t c = 0; c < 3; ++c) x2(0, c) = g.node_features()(2, c);
  Matrix expected = add(x2, matmul(x2, w.w1));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out.x(2, c), expected(0, c), 1e-15);
}

TEST(Mpnn, MatchesPerNodeOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = random_featured_graph(5, 0.4, 4, 4, rng);
    MpnnWeights w = MpnnWeights::random(4, rng);
    auto out = mpnn_forward(g.node_features(), g, g.edge_features(), w);
    auto [xo, eo] = oracle::naive_mpnn(g.node_features(), g, g.edge_features(), w);
    EXPECT_LT(oracle::max_abs_diff(out.x, xo), 1e-12);
    EXPECT_LT(oracle::max_abs_diff(out.e, eo), 1e-12);
  }
}

TEST(Mpnn, NodeUpdateIgnoresNonNeighbours) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = random_featured_graph(8, 0.25, 3, 3, rng);
    MpnnWeights w = MpnnWeights::random(3, rng);
    const auto base = mpnn_forward(g.node_features(), g, g.edge_features(), w);
    const std::size_t i = rng.below(8);
    for (std::size_t j = 0; j < 8; ++j) {
      if (j == i || g.has_edge(j, i)) continue;
      Matrix x = g.node_features();
      for (std::size_t c = 0; c < 3; ++c) x(j, c) += 10.0;
      const auto out = mpnn_forward(x, g, g.edge_features(), w);
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.x(i, c), base.x(i, c));
      // Edges not touching j keep their update.
      for (std::size_t id = 0; id < g.num_edges(); ++id) {
        const auto [s, d] = g.edges()[id];
        if (s == j || d == j) continue;
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.e(id, c), base.e(id, c));
      }
    }
  }
}

TEST(Mpnn, ShapeMismatch) {
  Rng rng(5);
  Graph g = random_featured_graph(4, 0.5, 3, 2, rng);
  MpnnWeights w = MpnnWeights::random(3, rng);
  EXPECT_THROW(mpnn_forward(g.node_features(), g, g.edge_features(), w), ShapeError);
  EXPECT_THROW(mpnn_forward(Matrix(5, 3), g, Matrix(g.num_edges(), 3), w), ShapeError);
}

TEST(Mpnn, BackwardMatchesFiniteDifferences) {
  Rng rng(6);
  Graph g = random_featured_graph(6, 0.35, 3, 3, rng);
  MpnnWeights w = MpnnWeights::random(3, rng);
  Matrix x = g.node_features(), e = g.edge_features();
  const Matrix cx = random_normal(6, 3, rng), ce = random_normal(g.num_edges(), 3, rng);
  auto f = [&] {
    auto out = mpnn_forward(x, g, e, w);
    double s = 0;
    for (std::size_t i = 0; i < out.x.size(); ++i) s += out.x.data()[i] * cx.data()[i];
    for (std::size_t i = 0; i < out.e.size(); ++i) s += out.e.data()[i] * ce.data()[i];
    return s;
  };
  auto out = mpnn_forward(x, g, e, w);
  auto grads = mpnn_backward(x, g, e, w, out.tape, cx, ce);
  EXPECT_LT(oracle::rel_err(grads.grad_x, oracle::finite_difference(x, f)), 1e-7);
  EXPECT_LT(oracle::rel_err(grads.grad_e, oracle::finite_difference(e, f)), 1e-7);
  EXPECT_LT(oracle::rel_err(grads.grad_w.w1, oracle::finite_difference(w.w1, f)), 1e-7);
  EXPECT_LT(oracle::rel_err(grads.grad_w.w2, oracle::finite_difference(w.w2, f)), 1e-7);
  EXPECT_LT(oracle::rel_err(grads.grad_w.w3, oracle::finite_difference(w.w3, f)), 1e-7);
  EXPECT_LT(oracle::rel_err(grads.grad_w.w4, oracle::finite_difference(w.w4, f)), 1e-7);
  EXPECT_LT(oracle::rel_err(grads.grad_w.w5, oracle::finite_difference(w.w5, f)), 1e-7);
}

TEST(GpsLayer, ZeroWeightsDoubleTheInput) {
  Rng rng(7);
  Graph g = random_featured_graph(9, 0.3, 5, 5, rng);
  GpsLayerParams p = zero_layer(5, 3);
  Workspace ws;
  for (auto kind : {AttentionKind::kFull, AttentionKind::kKmip}) {
    ForwardOptions opts;
    opts.kind = kind;
    auto out = gps_layer_forward(g.node_features(), g.edge_features(), g, p, opts, ws);
    Matrix twice = g.node_features();
    scale_inplace(twice, 2.0);
    EXPECT_EQ(out.x, twice);
    EXPECT_EQ(out.e, g.edge_features());
  }
}

TEST(GpsLayer, KmipWithLargeKEqualsFull) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + rng.below(15);
    Graph g = random_featured_graph(n, 0.3, 6, 6, rng);
    GpsLayerParams p = GpsLayerParams::random(6, 2, 3, 3, n, 12, rng);
    Workspace ws;
    ForwardOptions full, kmip;
    full.kind = AttentionKind::kFull;
    auto a = gps_layer_forward(g.node_features(), g.edge_features(), g, p, full, ws);
    auto b = gps_layer_forward(g.node_features(), g.edge_features(), g, p, kmip, ws);
    EXPECT_LT(oracle::max_abs_diff(a.x, b.x), 1e-10);
    EXPECT_EQ(a.e, b.e);
  }
}

TEST(GpsLayer, PermutationEquivariant) {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 6 + rng.below(10);
    Graph g = random_featured_graph(n, 0.3, 4, 4, rng);
    GpsLayerParams p = GpsLayerParams::random(4, 1, 4, 4, 3, 8, rng);
    const auto perm = oracle::random_permutation(n, rng);
    Graph pg = permute_nodes(g, perm);
    Workspace ws;
    auto a = gps_layer_forward(g.node_features(), g.edge_features(), g, p, {}, ws);
    auto b = gps_layer_forward(pg.node_features(), pg.edge_features(), pg, p, {}, ws);
    EXPECT_LT(oracle::max_abs_diff(b.x, permute_rows(a.x, perm)), 1e-12);
  }
}

TEST(GpsLayer, BackwardMatchesFiniteDifferences) {
  Rng rng(10);
  Graph g = random_featured_graph(7, 0.3, 4, 4, rng);
  GpsLayerParams p = GpsLayerParams::random(4, 2, 2, 3, 7, 6, rng);
  Matrix x = g.node_features(), e = g.edge_features();
  const Matrix cx = random_normal(7, 4, rng), ce = random_normal(g.num_edges(), 4, rng);
  ForwardOptions opts;
  auto f = [&] {
    Workspace ws;
    auto out = gps_layer_forward(x, e, g, p, opts, ws);
    double s = 0;
    for (std::size_t i = 0; i < out.x.size(); ++i) s += out.x.data()[i] * cx.data()[i];
    for (std::size_t i = 0; i < out.e.size(); ++i) s += out.e.data()[i] * ce.data()[i];
    return s;
  };
  Workspace ws;
  auto out = gps_layer_forward(x, e, g, p, opts, ws);
  auto grads = gps_layer_backward(*out.tape, g, p, cx, ce, ws);
  EXPECT_LT(oracle::rel_err(grads.grad_x, oracle::finite_difference(x, f)), 1e-6);
  EXPECT_LT(oracle::rel_err(grads.grad_e, oracle::finite_difference(e, f)), 1e-6);
  std::vector<Matrix*> analytic;
  GpsLayerParams::visit(grads.grad_params, [&](Matrix& m) { analytic.push_back(&m); });
  std::size_t slot = 0;
  GpsLayerParams::visit(p, [&](Matrix& m) {
    EXPECT_LT(oracle::rel_err(*analytic[slot], oracle::finite_difference(m, f)), 1e-6)
        << "parameter " << slot;
    ++slot;
  });
}

GpsConfig small_config(std::size_t d_in, std::size_t d_edge, std::size_t k) {
  GpsConfig c;
  c.d_in = d_in;
  c.d_edge_in = d_edge;
  c.hidden = 4;
  c.layers = 2;
  c.heads = 2;
  c.d_k = 2;
  c.d_v = 3;
  c.k = k;
  c.classes = 3;
  return c;
}

TEST(GpsModel, ZeroLayersIsEncoderPlusHead) {
  Rng rng(11);
  GpsConfig c = small_config(3, 2, 2);
  c.layers = 0;
  GpsModel m = GpsModel::random(c, rng);
  Graph g = random_featured_graph(5, 0.4, 3, 2, rng);
  Matrix h = matmul(g.node_features(), m.enc_w);
  add_row_bias(h, m.enc_b);
  Matrix z = matmul(h, m.head_w1);
  add_row_bias(z, m.head_b1);
  for (double& v : z.values()) v = std::max(v, 0.0);
  Matrix expected = matmul(z, m.head_w2);
  add_row_bias(expected, m.head_b2);
  EXPECT_LT(oracle::max_abs_diff(model_logits(g, m, AttentionKind::kKmip), expected), 1e-14);
}

TEST(GpsModel, ParameterCountMatchesVisitedEntries) {
  Rng rng(12);
  GpsModel m = GpsModel::random(small_config(3, 2, 2), rng);
  std::size_t total = 0;
  m.for_each([&](const Matrix& p) { total += p.size(); });
  EXPECT_EQ(m.parameter_count(), total);
  // enc 3*4+4, edge 2*4+4, head 4*4+4+4*3+3
  const std::size_t outer = 16 + 12 + 20 + 15;
  const std::size_t mpnn = 5 * 16, attn = 2 * (4 * 2 * 2 + 4 * 3 + 3 * 4);
  const std::size_t mlp = 4 * 8 + 8 + 8 * 4 + 4, norm = 6 * 4;
  EXPECT_EQ(total, outer + 2 * (mpnn + attn + mlp + norm));
}

TEST(GpsModel, InputMismatchIsValidationError) {
  Rng rng(13);
  GpsModel m = GpsModel::random(small_config(3, 2, 2), rng);
  EXPECT_THROW(model_logits(random_featured_graph(5, 0.4, 2, 2, rng), m, AttentionKind::kKmip),
               ValidationError);
  EXPECT_THROW(model_logits(random_featured_graph(5, 0.4, 3, 1, rng), m, AttentionKind::kKmip),
               ValidationError);
}

TEST(GpsModel, PermutationEquivariant) {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 8 + rng.below(10);
    GpsConfig c = small_config(3, 2, 3);
    c.pe = {PeKind::kRwse, 3};
    GpsModel m = GpsModel::random(c, rng);
    Graph g = random_featured_graph(n, 0.3, 3, 2, rng);
    const auto perm = oracle::random_permutation(n, rng);
    const Matrix a = model_logits(g, m, AttentionKind::kKmip);
    const Matrix b = model_logits(permute_nodes(g, perm), m, AttentionKind::kKmip);
    EXPECT_LT(oracle::max_abs_diff(b, permute_rows(a, perm)), 1e-10);
  }
}

TEST(GpsModel, KmipWithLargeKEqualsFull) {
  Rng rng(15);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + rng.below(20);
    GpsModel m = GpsModel::random(small_config(3, 2, n), rng);
    Graph g = random_featured_graph(n, 0.3, 3, 2, rng);
    EXPECT_LT(oracle::max_abs_diff(model_logits(g, m, AttentionKind::kKmip),
                                   model_logits(g, m, AttentionKind::kFull)),
              1e-9);
  }
}

TEST(GpsModel, DeterministicGivenSeed) {
  Rng a(16), b(16);
  EXPECT_EQ(GpsModel::random(small_config(3, 2, 2), a).head_w2,
            GpsModel::random(small_config(3, 2, 2), b).head_w2);
}

double model_loss(const Graph& g, const GpsModel& m, AttentionKind kind) {
  return weighted_cross_entropy(model_logits(g, m, kind), *g.node_labels()).loss;
}

void check_model_gradient(const Graph& g, GpsModel& m, AttentionKind kind, double tol) {
  Workspace ws;
  ForwardOptions opts;
  opts.kind = kind;
  auto fwd = model_forward(g, m, opts, ws);
  auto loss = weighted_cross_entropy(fwd.logits, *g.node_labels());
  GpsModel grad = model_backward(*fwd.tape, g, m, loss.grad, ws);
  std::vector<Matrix*> analytic;
  grad.for_each([&](Matrix& p) { analytic.push_back(&p); });
  std::size_t slot = 0;
  m.for_each([&](Matrix& p) {
    const Matrix fd = oracle::finite_difference(p, [&] { return model_loss(g, m, kind); });
    EXPECT_LT(oracle::rel_err(*analytic[slot], fd), tol) << "parameter " << slot;
    ++slot;
  });
}

Graph labelled(Graph g, std::size_t classes, Rng& rng) {
  std::vector<int> labels(g.num_nodes());
  for (auto& y : labels) y = static_cast<int>(rng.below(classes));
  return g.with_labels(labels);
}

TEST(GpsModel, EndToEndGradientMatchesFiniteDifferences) {
  Rng rng(17);
  int checked = 0;
  for (int attempt = 0; attempt < 100 && checked < 2; ++attempt) {
    GpsModel m = GpsModel::random(small_config(3, 2, 3), rng);
    Graph g = labelled(random_featured_graph(6, 0.35, 3, 2, rng), 3, rng);
    if (oracle::model_topk_margin(g, m) <= 1e-3) continue;
    check_model_gradient(g, m, AttentionKind::kKmip, 1e-5);
    ++checked;
  }
  EXPECT_EQ(checked, 2);
  GpsConfig c = small_config(3, 0, 1);
  c.pe = {PeKind::kLapPe, 2};
  GpsModel m = GpsModel::random(c, rng);
  Graph g = labelled(random_featured_graph(6, 0.35, 3, 0, rng), 3, rng);
  check_model_gradient(g, m, AttentionKind::kFull, 1e-5);
}

TEST(GpsModel, EqualOutputsOnWlEquivalentPair) {
  const Graph two_c3 = disjoint_union(oracle::cycle_graph(3), oracle::cycle_graph(3));
  const Graph c6 = oracle::cycle_graph(6);
  GpsConfig c = small_config(1, 0, 2);
  c.hidden = 8;
  int equal_plain = 0, differ_pe = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    GpsModel plain = GpsModel::random(c, rng);
    equal_plain += oracle::same_row_multiset(model_logits(two_c3, plain, AttentionKind::kKmip),
                                             model_logits(c6, plain, AttentionKind::kKmip),
                                             1e-6);
    GpsConfig pc = c;
    pc.pe = {PeKind::kLapPe, 3};
    GpsModel with_pe = GpsModel::random(pc, rng);
    differ_pe += !oracle::same_row_multiset(
        model_logits(two_c3, with_pe, AttentionKind::kKmip),
        model_logits(c6, with_pe, AttentionKind::kKmip), 1e-6);
  }
  EXPECT_EQ(equal_plain, 20);
  EXPECT_GE(differ_pe, 19);
}

TEST(Dropout, OnlyActiveWhenTraining) {
  Rng rng(18);
  GpsConfig c = small_config(3, 2, 3);
  c.attn_dropout = c.mlp_dropout = 0.5;
  GpsModel m = GpsModel::random(c, rng);
  Graph g = random_featured_graph(10, 0.3, 3, 2, rng);
  Workspace ws;
  ForwardOptions eval;
  EXPECT_EQ(model_forward(g, m, eval, ws).logits, model_forward(g, m, eval, ws).logits);
  ForwardOptions train_opts;
  train_opts.training = true;
  EXPECT_THROW(model_forward(g, m, train_opts, ws), ParameterError);
  Rng drop(5);
  train_opts.rng = &drop;
  EXPECT_NE(model_forward(g, m, train_opts, ws).logits, model_forward(g, m, eval, ws).logits);
}

TEST(CrossEntropy, UniformLogits) {
  auto r = weighted_cross_entropy(Matrix(4, 2), {0, 1, 1, 1}, false);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.grad(0, 0), -0.125, 1e-15);
  EXPECT_NEAR(r.grad(0, 1), 0.125, 1e-15);
}

TEST(CrossEntropy, ClassWeightsFavourRareClass) {
  // V = 4, class 0 has one node (weight 3/4), class 1 three (weight 1/4).
  auto r = weighted_cross_entropy(Matrix(4, 2), {0, 1, 1, 1});
  const double total = 0.75 + 3 * 0.25;
  EXPECT_NEAR(r.grad(0, 0), -0.5 * 0.75 / total, 1e-15);
  EXPECT_NEAR(r.grad(1, 1), -0.5 * 0.25 / total, 1e-15);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
}

TEST(CrossEntropy, SingleClassFallsBackToUniform) {
  auto r = weighted_cross_entropy(Matrix{{1, 0}, {2, 0}}, {0, 0});
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_GT(r.loss, 0.0);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  Rng rng(19);
  Matrix z = random_normal(7, 4, rng);
  std::vector<int> y = {0, 1, 2, 3, 1, 1, 0};
  auto r = weighted_cross_entropy(z, y);
  Matrix fd = oracle::finite_difference(z, [&] { return weighted_cross_entropy(z, y).loss; });
  EXPECT_LT(oracle::rel_err(r.grad, fd), 1e-8);
}

TEST(Schedule, WarmupThenCosine) {
  TrainConfig c;
  c.lr = 1.0;
  c.epochs = 10;
  c.warmup_epochs = 2;
  EXPECT_NEAR(c.lr_at(0), 1.0 / 3, 1e-15);
  EXPECT_NEAR(c.lr_at(1), 2.0 / 3, 1e-15);
  EXPECT_NEAR(c.lr_at(2), 1.0, 1e-15);
  for (std::size_t e = 3; e < 10; ++e) EXPECT_LT(c.lr_at(e), c.lr_at(e - 1));
  EXPECT_GT(c.lr_at(9), 0.0);
}

Graph toy_clusters(std::size_t per_class, Rng& rng) {
  Matrix pts(2 * per_class, 2);
  std::vector<int> labels;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int y = static_cast<int>(i % 2);
    pts(i, 0) = (y ? 2.0 : -2.0) + 0.3 * rng.normal();
    pts(i, 1) = 0.3 * rng.normal();
    labels.push_back(y);
  }
  return knn_graph(pts, 3).with_labels(labels);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  Rng rng(20);
  GpsConfig c = small_config(2, 1, 3);
  c.classes = 2;
  GpsModel m = GpsModel::random(c, rng);
  const GpsModel before = m;
  TrainConfig tc;
  tc.lr = 0.0;
  tc.epochs = 3;
  train(m, {toy_clusters(5, rng), toy_clusters(5, rng)}, {}, tc);
  std::vector<const Matrix*> a;
  before.for_each([&](const Matrix& p) { a.push_back(&p); });
  std::size_t slot = 0;
  m.for_each([&](const Matrix& p) { EXPECT_EQ(p, *a[slot++]); });
}

TEST(Train, LogHasHeaderAndOneRowPerEpoch) {
  Rng rng(21);
  GpsConfig c = small_config(2, 1, 3);
  c.classes = 2;
  GpsModel m = GpsModel::random(c, rng);
  TrainConfig tc;
  tc.epochs = 0;
  std::ostringstream log;
  EXPECT_TRUE(train(m, {toy_clusters(5, rng)}, {}, tc, &log).empty());
  EXPECT_EQ(log.str(), "epoch,loss,train_acc,val_acc,epoch_seconds\n");
  tc.epochs = 3;
  std::ostringstream log3;
  train(m, {toy_clusters(5, rng)}, {toy_clusters(5, rng)}, tc, &log3);
  std::istringstream lines(log3.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 4);
}

TEST(Train, DeterministicGivenSeed) {
  auto run = [] {
    Rng rng(22);
    GpsConfig c = small_config(2, 1, 3);
    c.classes = 2;
    c.mlp_dropout = 0.2;
    GpsModel m = GpsModel::random(c, rng);
    TrainConfig tc;
    tc.epochs = 3;
    tc.lr = 1e-2;
    auto log = train(m, {toy_clusters(5, rng), toy_clusters(5, rng)}, {}, tc);
    return std::make_pair(log.back().loss, m.head_w2);
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, RequiresLabels) {
  Rng rng(23);
  GpsConfig c = small_config(2, 1, 3);
  GpsModel m = GpsModel::random(c, rng);
  Graph g = toy_clusters(5, rng);
  EXPECT_THROW(train(m, {Graph(g.num_nodes(), g.node_features(), g.edges(), g.edge_features())},
                     {}, TrainConfig{}),
               ValidationError);
}

TEST(Train, NonFiniteLossIsReported) {
  Rng rng(24);
  GpsConfig c = small_config(2, 1, 3);
  c.classes = 2;
  GpsModel m = GpsModel::random(c, rng);
  Graph g = toy_clusters(5, rng);
  Matrix x = g.node_features();
  x(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train(m, {g.with_node_features(x)}, {}, TrainConfig{}), NonFiniteError);
}

TEST(Train, OverfitsSmallSeparableGraph) {
  Rng rng(25);
  Graph g = toy_clusters(10, rng);  // 20 nodes
  GpsConfig c;
  c.d_in = 2;
  c.d_edge_in = 1;
  c.hidden = 8;
  c.layers = 1;
  c.k = 5;
  c.classes = 2;
  GpsModel m = GpsModel::random(c, rng);
  TrainConfig tc;
  tc.epochs = 200;
  tc.lr = 1e-2;
  auto log = train(m, {g}, {}, tc);
  bool reached = false;
  for (const auto& r : log) reached = reached || r.train_acc == 1.0;
  EXPECT_TRUE(reached);
  EXPECT_EQ(evaluate(m, {g}, AttentionKind::kKmip), 1.0);
}

}  // namespace
}  // namespace kmip
