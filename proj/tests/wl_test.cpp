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

#include <Eigen/Eigenvalues>
#include <set>

#include "json.hpp"
#include "kmip/encodings.hpp"
#include "kmip/wl.hpp"
#include "oracles.hpp"

namespace kmip {
namespace {

using Partition = std::set<std::set<std::size_t>>;

Partition partition_of(const Coloring& c, std::size_t begin = 0, std::size_t end = SIZE_MAX) {
  end = std::min(end, c.colors.size());
  std::map<std::size_t, std::set<std::size_t>> classes;
  for (std::size_t v = begin; v < end; ++v) classes[c.colors[v]].insert(v - begin);
  Partition p;
  for (auto& [id, members] : classes) p.insert(members);
  return p;
}

// Every class of `fine` lies inside one class of `coarse`.
bool refines(const Coloring& fine, const Coloring& coarse) {
  std::map<std::size_t, std::size_t> image;
  for (std::size_t v = 0; v < fine.colors.size(); ++v) {
    auto [it, inserted] = image.emplace(fine.colors[v], coarse.colors[v]);
    if (!inserted && it->second != coarse.colors[v]) return false;
  }
  return true;
}

Graph path(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  return Graph::undirected(n, pairs);
}

Graph two_c3() { return disjoint_union(oracle::cycle_graph(3), oracle::cycle_graph(3)); }

Graph random_undirected(std::size_t n, double p, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) pairs.emplace_back(i, j);
  return Graph::undirected(n, pairs);
}

std::vector<EncodingScheme> catalogue() {
  return {EncodingScheme::constant(), EncodingScheme::lap_pe(4), EncodingScheme::rwse(4),
          EncodingScheme::gps(), EncodingScheme::gps({PeKind::kLapPe, 3})};
}

TEST(Wl1, CycleStaysOneClass) {
  const Graph c6 = oracle::cycle_graph(6);
  for (const auto& c : wl1_refine(c6, feature_coloring(c6), 10)) EXPECT_EQ(c.num_classes(), 1u);
  for (const auto& c : seg_wl_refine(c6, EncodingScheme::constant(), 10))
    EXPECT_EQ(c.num_classes(), 1u);
}

TEST(Wl1, PathSplitsEndpointsFromMiddle) {
  const Graph p3 = path(3);
  const auto run = wl1_refine(p3, feature_coloring(p3), 10);
  ASSERT_GE(run.size(), 2u);
  EXPECT_EQ(partition_of(run[1]), (Partition{{0, 2}, {1}}));
}

TEST(Wl1, HandTracedFiveNodeTree) {
  // 0 - 1 - 2, 1 - 3 - 4. Iteration 1 separates by degree; iteration 2
  // separates leaf 4 (next to the degree-2 node) from leaves 0 and 2.
  const Graph g = Graph::undirected(5, {{0, 1}, {1, 2}, {1, 3}, {3, 4}});
  const auto run = wl1_refine(g, feature_coloring(g), 10);
  EXPECT_EQ(partition_of(run[0]), (Partition{{0, 1, 2, 3, 4}}));
  EXPECT_EQ(partition_of(run[1]), (Partition{{0, 2, 4}, {1}, {3}}));
  EXPECT_EQ(partition_of(run[2]), (Partition{{0, 2}, {4}, {1}, {3}}));
  EXPECT_EQ(run.back().num_classes(), 4u);
  EXPECT_EQ(run.size(), 4u);  // iteration 3 repeats the partition
}

TEST(Wl1, InitialColoringIsUsed) {
  const Graph g = oracle::cycle_graph(4).with_node_features(Matrix{{1}, {2}, {1}, {1}});
  const auto run = wl1_refine(g, feature_coloring(g), 10);
  EXPECT_EQ(partition_of(run[0]), (Partition{{0, 2, 3}, {1}}));
  EXPECT_EQ(partition_of(run[1]), (Partition{{0, 2}, {3}, {1}}));
}

TEST(Wl1, DirectedGraphsAggregateInNeighbours) {
  // 0 -> 1 -> 2: in-degrees 0, 1, 1; node 2 hears from a node that has an
  // in-neighbour, node 1 from one that does not.
  const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}});
  const auto run = wl1_refine(g, feature_coloring(g), 10);
  EXPECT_EQ(partition_of(run[1]), (Partition{{0}, {1, 2}}));
  EXPECT_EQ(partition_of(run[2]), (Partition{{0}, {1}, {2}}));
}

TEST(Wl1, InitialColoringMustCoverGraph) {
  const Graph g = path(3);
  EXPECT_THROW(wl1_refine(g, feature_coloring(path(2)), 3), ShapeError);
}

TEST(SegWl, SingleNodeStabilizesImmediately) {
  const Graph g = Graph::from_edges(1, {});
  for (const auto& scheme : catalogue()) {
    const auto run = seg_wl_refine(g, scheme, 10);
    ASSERT_EQ(run.size(), 2u) << scheme.name;
    EXPECT_EQ(run[0].num_classes(), 1u);
    EXPECT_EQ(run[1].num_classes(), 1u);
  }
}

TEST(SegWl, ColorIdsAreDenseInFirstAppearanceOrder) {
  Rng rng(1);
  const Graph g = random_undirected(10, 0.3, rng);
  for (const auto& c : seg_wl_refine(g, EncodingScheme::rwse(3), 10)) {
    std::size_t next = 0;
    for (std::size_t id : c.colors) {
      ASSERT_LE(id, next);
      if (id == next) ++next;
    }
    EXPECT_EQ(next, c.num_classes());
  }
}

TEST(SegWl, NotStronglyRegularIsSchemeError) {
  EncodingScheme s = EncodingScheme::constant();
  s.discriminator = [](const std::string&) { return false; };
  EXPECT_THROW(seg_wl_refine(path(3), s, 3), SchemeError);
  EXPECT_THROW(check_strong_regularity(s, path(3)), SchemeError);
  EXPECT_NO_THROW(check_strong_regularity(EncodingScheme::gps(), path(3)));
}

TEST(SegWl, SchemeNames) {
  EXPECT_EQ(EncodingScheme::from_name("constant").name, "constant");
  EXPECT_EQ(EncodingScheme::from_name("lap_pe").name, "lap_pe:8");
  EXPECT_EQ(EncodingScheme::from_name("rwse:3").name, "rwse:3");
  EXPECT_EQ(EncodingScheme::from_name("gps").name, "gps");
  EXPECT_EQ(EncodingScheme::from_name("gps:lap_pe:2").name, "gps:lap_pe:2");
  for (const char* bad : {"", "wl2", "lap_pe:0", "lap_pe:x", "gps:foo", "rwse:"})
    EXPECT_THROW(EncodingScheme::from_name(bad), SchemeError) << bad;
}

TEST(Distinguish, FigureFourPairIsNotDistinguishedWithoutEncodings) {
  const auto seg = distinguishes(two_c3(), oracle::cycle_graph(6), EncodingScheme::constant(), 12);
  EXPECT_FALSE(seg.distinguished);
  EXPECT_FALSE(seg.iteration.has_value());
  EXPECT_FALSE(wl1_distinguishes(two_c3(), oracle::cycle_graph(6), 12).distinguished);
}

TEST(Distinguish, PathVersusTriangle) {
  const auto d = distinguishes(path(3), oracle::cycle_graph(3), EncodingScheme::constant(), 10);
  EXPECT_TRUE(d.distinguished);
  EXPECT_EQ(d.iteration, 1u);
  EXPECT_EQ(wl1_distinguishes(path(3), oracle::cycle_graph(3), 10).iteration, 1u);
}

TEST(Distinguish, LaplacianSchemeSeparatesFigureFourAtStart) {
  for (const auto& s : {EncodingScheme::lap_pe(8), EncodingScheme::lap_pe(3),
                        EncodingScheme::gps({PeKind::kLapPe, 3})}) {
    const auto d = distinguishes(two_c3(), oracle::cycle_graph(6), s, 12);
    EXPECT_TRUE(d.distinguished) << s.name;
    EXPECT_EQ(d.iteration, 0u) << s.name;
  }
}

TEST(Distinguish, DifferentSizesDifferAtStart) {
  EXPECT_EQ(distinguishes(path(3), path(4), EncodingScheme::constant(), 5).iteration, 0u);
}

TEST(Distinguish, ReportJson) {
  const auto d = distinguishes(path(3), oracle::cycle_graph(3), EncodingScheme::constant(), 10);
  const auto j = nlohmann::json::parse(distinction_json(d, "constant", 1e-8));
  EXPECT_EQ(j["distinguished"], true);
  EXPECT_EQ(j["iteration"], 1);
  EXPECT_EQ(j["classes_per_iter"].size(), d.classes_per_iter.size());
  const auto n = nlohmann::json::parse(distinction_json(
      distinguishes(two_c3(), oracle::cycle_graph(6), EncodingScheme::constant(), 4),
      "constant", 1e-8));
  EXPECT_EQ(n["distinguished"], false);
  EXPECT_EQ(n["iteration"], -1);
}

TEST(Distinguish, EdgeFeaturesOnlyMatterForGpsScheme) {
  Graph a = oracle::cycle_graph(4);
  Matrix ef(a.num_edges(), 1, 1.0);
  Graph b(a.num_nodes(), a.node_features(), a.edges(), ef);
  ef(0, 0) = 2.0;
  Graph c(a.num_nodes(), a.node_features(), a.edges(), ef);
  EXPECT_FALSE(distinguishes(b, c, EncodingScheme::constant(), 5).distinguished);
  EXPECT_TRUE(distinguishes(b, c, EncodingScheme::gps(), 5).distinguished);
}

TEST(Refinement, ConstantSegMatchesWl1OnRandomGraphs) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(15);
    const Graph g = rng.below(2) ? random_undirected(n, rng.uniform(0.1, 0.6), rng)
                                 : oracle::random_digraph(n, rng.uniform(0.1, 0.5), rng);
    const auto a = wl1_refine(g, feature_coloring(g), 20);
    const auto b = seg_wl_refine(g, EncodingScheme::constant(), 20);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t l = 0; l < a.size(); ++l)
      ASSERT_EQ(partition_of(a[l]), partition_of(b[l])) << "trial " << trial << " iter " << l;
  }
}

TEST(Refinement, PartitionsOnlySplitAndStabilizeWithinN) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(14);
    const Graph g = oracle::random_digraph(n, rng.uniform(0.1, 0.5), rng);
    for (const auto& scheme : catalogue()) {
      const auto run = seg_wl_refine(g, scheme, n + 1);
      for (std::size_t l = 1; l < run.size(); ++l) EXPECT_TRUE(refines(run[l], run[l - 1]));
      EXPECT_LE(run.size(), n + 1) << scheme.name;
      EXPECT_EQ(run.back().num_classes(), run[run.size() - 2].num_classes());
    }
    const auto w = wl1_refine(g, feature_coloring(g), n + 1);
    for (std::size_t l = 1; l < w.size(); ++l) EXPECT_TRUE(refines(w[l], w[l - 1]));
    EXPECT_LE(w.size(), n + 1);
  }
}

TEST(Refinement, FinerSchemesNeverLag) {
  Rng rng(4);
  std::size_t violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Graph a = random_undirected(2 + rng.below(11), rng.uniform(0.15, 0.5), rng);
    const Graph b = random_undirected(2 + rng.below(11), rng.uniform(0.15, 0.5), rng);
    for (const auto& fine : {EncodingScheme::lap_pe(4), EncodingScheme::rwse(4)}) {
      const auto v = check_refinement_property(a, b, EncodingScheme::constant(), fine, 12);
      if (!v.holds) {
        ++violations;
        ADD_FAILURE() << v.details;
      }
    }
  }
  EXPECT_EQ(violations, 0u);
}

TEST(Refinement, PathVersusTriangleExample) {
  const auto v = check_refinement_property(path(3), oracle::cycle_graph(3),
                                           EncodingScheme::constant(),
                                           EncodingScheme::lap_pe(3), 10);
  EXPECT_TRUE(v.holds);
  EXPECT_LE(*v.fine.iteration, 1u);
  const auto same = check_refinement_property(path(4), path(4), EncodingScheme::constant(),
                                              EncodingScheme::lap_pe(3), 10);
  EXPECT_TRUE(same.holds);
  EXPECT_FALSE(same.coarse.distinguished);
  EXPECT_FALSE(same.fine.distinguished);
}

TEST(Refinement, IsomorphicGraphsAreNeverDistinguished) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const Graph g = rng.below(2) ? random_undirected(n, rng.uniform(0.1, 0.6), rng)
                                 : oracle::random_digraph(n, rng.uniform(0.1, 0.5), rng);
    const Graph h = permute_nodes(g, oracle::random_permutation(n, rng));
    for (const auto& scheme : catalogue())
      EXPECT_FALSE(distinguishes(g, h, scheme, n + 1).distinguished)
          << scheme.name << " trial " << trial;
    EXPECT_FALSE(wl1_distinguishes(g, h, n + 1).distinguished);
  }
}

TEST(Refinement, GpsModelsAgreeWhereTheSchemeCannotSeparate) {
  // 2-regular and 3-regular pairs on equal node counts, plus permuted copies.
  const Graph k33 = Graph::undirected(
      6, {{0, 3}, {0, 4}, {0, 5}, {1, 3}, {1, 4}, {1, 5}, {2, 3}, {2, 4}, {2, 5}});
  const Graph prism = Graph::undirected(
      6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {0, 3}, {1, 4}, {2, 5}});
  Rng rng(6);
  std::vector<std::pair<Graph, Graph>> pairs = {
      {two_c3(), oracle::cycle_graph(6)},
      {disjoint_union(oracle::cycle_graph(4), oracle::cycle_graph(4)), oracle::cycle_graph(8)},
      {k33, prism}};
  for (int i = 0; i < 5; ++i) {
    const Graph g = random_undirected(8, 0.4, rng);
    pairs.emplace_back(g, permute_nodes(g, oracle::random_permutation(8, rng)));
  }
  GpsConfig c;
  c.d_in = 1;
  c.hidden = 6;
  c.layers = 2;
  c.k = 3;
  c.classes = 3;
  for (const auto& [a, b] : pairs) {
    ASSERT_FALSE(distinguishes(a, b, EncodingScheme::gps(), 12).distinguished);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng wr(seed);
      GpsModel m = GpsModel::random(c, wr);
      for (auto kind : {AttentionKind::kKmip, AttentionKind::kFull}) {
        EXPECT_TRUE(oracle::same_row_multiset(model_logits(a, m, kind), model_logits(b, m, kind),
                                              1e-6));
      }
    }
  }
}

std::vector<double> eigen_oracle(const Matrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  const auto& v = solver.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

TEST(Laplacian, TwoNodeClosedForm) {
  const Graph k2 = Graph::undirected(2, {{0, 1}});
  EXPECT_EQ(graph_laplacian(k2), (Matrix{{1, -1}, {-1, 1}}));
  const auto eig = laplacian_eigen(k2);
  EXPECT_NEAR(eig.values[0], 0.0, 1e-14);
  EXPECT_NEAR(eig.values[1], 2.0, 1e-14);
  // Canonical sign: first entry of largest magnitude is positive.
  EXPECT_NEAR(eig.vectors(0, 1), 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(eig.vectors(1, 1), -1 / std::sqrt(2.0), 1e-14);
}

TEST(Laplacian, CycleSpectrum) {
  const auto eig = laplacian_eigen(oracle::cycle_graph(6));
  const std::vector<double> expected = {0, 1, 1, 3, 3, 4};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(eig.values[i], expected[i], 1e-8);
  const auto disjoint = laplacian_eigen(two_c3());
  const std::vector<double> expected2 = {0, 0, 3, 3, 3, 3};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(disjoint.values[i], expected2[i], 1e-8);
}

TEST(Laplacian, DirectedEdgesAreSymmetrizedAndLoopsDropped) {
  const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}, {2, 1}, {2, 2}});
  EXPECT_EQ(graph_laplacian(g), (Matrix{{1, -1, 0}, {-1, 2, -1}, {0, -1, 1}}));
}

TEST(Laplacian, JacobiMatchesReferenceSolver) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const Matrix lap = graph_laplacian(random_undirected(n, rng.uniform(0.1, 0.7), rng));
    const auto eig = jacobi_eigen(lap);
    const auto ref = eigen_oracle(lap);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(eig.values[i], ref[i], 1e-10);
    // L v = lambda v and V^T V = I.
    const Matrix lv = matmul(lap, eig.vectors);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = 0; r < n; ++r)
        EXPECT_NEAR(lv(r, c), eig.values[c] * eig.vectors(r, c), 1e-10);
    const Matrix gram = matmul_at_b(eig.vectors, eig.vectors);
    EXPECT_LT(oracle::max_abs_diff(gram, identity<double>(n)), 1e-12);
  }
}

TEST(Laplacian, GeneralSymmetricMatrices) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    Matrix a = random_normal(n, n, rng);
    a = add(a, transpose(a));
    const auto eig = jacobi_eigen(a);
    const auto ref = eigen_oracle(a);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(eig.values[i], ref[i], 1e-10);
  }
  EXPECT_THROW(jacobi_eigen(Matrix(2, 3)), ShapeError);
}

TEST(Laplacian, PositionalEncodingPadsSmallGraphs) {
  const Matrix pe = laplacian_pe(Graph::undirected(2, {{0, 1}}), 4);
  ASSERT_EQ(pe.cols(), 4u);
  EXPECT_NEAR(std::abs(pe(0, 0)), 1 / std::sqrt(2.0), 1e-14);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(pe(r, 2), 0.0);
    EXPECT_EQ(pe(r, 3), 0.0);
  }
}

TEST(Rwse, TriangleReturnProbabilities) {
  const Matrix r = rwse(oracle::cycle_graph(3), 3);
  for (std::size_t v = 0; v < 3; ++v) {
    EXPECT_NEAR(r(v, 0), 0.0, 1e-15);
    EXPECT_NEAR(r(v, 1), 0.5, 1e-15);
    EXPECT_NEAR(r(v, 2), 0.25, 1e-15);
  }
}

TEST(Rwse, TwoNodeChainAlternates) {
  const Matrix r = rwse(Graph::undirected(2, {{0, 1}}), 6);
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(r(0, t), t % 2 ? 1.0 : 0.0);
}

TEST(Rwse, SelfLoopAndIsolatedNodes) {
  const Matrix r = rwse(Graph::from_edges(2, {{0, 0}}), 4);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(r(0, t), 1.0);
    EXPECT_EQ(r(1, t), 0.0);
  }
}

TEST(Rwse, MatchesDenseMatrixPowers) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    const Graph g = oracle::random_digraph(n, 0.4, rng);
    Matrix p(n, n);
    for (const auto& e : g.edges()) p(e.src, e.dst) = 1;
    for (std::size_t i = 0; i < n; ++i) {
      double deg = 0;
      for (std::size_t j = 0; j < n; ++j) deg += p(i, j);
      for (std::size_t j = 0; j < n; ++j) p(i, j) = deg > 0 ? p(i, j) / deg : 0.0;
    }
    const Matrix r = rwse(g, 5);
    Matrix power = identity<double>(n);
    for (std::size_t t = 0; t < 5; ++t) {
      power = oracle::naive_matmul(power, p);
      for (std::size_t v = 0; v < n; ++v) EXPECT_NEAR(r(v, t), power(v, v), 1e-14);
    }
  }
}

TEST(Quantize, RoundsToSteps) {
  EXPECT_EQ(quantize(0.0, 1e-8), "0");
  EXPECT_EQ(quantize(-0.0, 1e-8), "0");
  EXPECT_EQ(quantize(-1e-12, 1e-8), "0");
  EXPECT_EQ(quantize(1.0, 1e-8), quantize(1.0 + 1e-12, 1e-8));
  EXPECT_NE(quantize(1.0, 1e-8), quantize(1.0 + 1e-7, 1e-8));
  EXPECT_EQ(quantize(3.0, 1.0), "3");
}

TEST(Interner, DenseAndInjective) {
  ColorInterner in;
  EXPECT_EQ(in.intern("b"), 0u);
  EXPECT_EQ(in.intern("a"), 1u);
  EXPECT_EQ(in.intern("b"), 0u);
  EXPECT_EQ(in.intern(std::string("a\0", 2)), 2u);
  EXPECT_EQ(in.size(), 3u);
}

}  // namespace
}  // namespace kmip
