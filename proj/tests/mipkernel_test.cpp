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

#include "kmip/mipkernel.hpp"
#include "oracles.hpp"

namespace kmip {
namespace {

template <typename T>
void expect_matches_oracle(const BasicMatrix<T>& q, const BasicMatrix<T>& key, std::size_t k,
                           const TopKResult<T>& got) {
  const auto want = oracle::dense_topk(q, key, k);
  ASSERT_EQ(got.rows(), q.rows());
  ASSERT_EQ(got.k(), k);
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) {
      ASSERT_EQ(got.indices(i, j), want.indices[i][j]) << "row " << i << " slot " << j;
      ASSERT_EQ(got.values(i, j), want.values[i][j]) << "row " << i << " slot " << j;
    }
}

TEST(RowwiseTopK, SmallExampleK1) {
  Workspace ws;
  Matrix q{{1, 0}, {0, 1}};
  Matrix key{{2, 0}, {0, 3}, {1, 1}};
  auto r = rowwise_topk(q, key, 1, TileConfig{}, ws);
  EXPECT_EQ(r.indices, (IndexMatrix{{0}, {1}}));
  EXPECT_EQ(r.values, (Matrix{{2}, {3}}));
  expect_matches_oracle(q, key, 1, r);
}

TEST(RowwiseTopK, SmallExampleK2) {
  Workspace ws;
  Matrix q{{1, 0}, {0, 1}};
  Matrix key{{2, 0}, {0, 3}, {1, 1}};
  auto r = rowwise_topk(q, key, 2, TileConfig{}, ws);
  EXPECT_EQ(r.indices, (IndexMatrix{{0, 2}, {1, 2}}));
  EXPECT_EQ(r.values, (Matrix{{2, 1}, {3, 1}}));
}

TEST(RowwiseTopK, KEqualsMIsFullArgsort) {
  Workspace ws;
  Rng rng(12);
  Matrix q = random_normal(9, 4, rng), key = random_normal(13, 4, rng);
  auto r = rowwise_topk(q, key, 13, TileConfig{4, 5, 1}, ws);
  expect_matches_oracle(q, key, 13, r);
}

TEST(RowwiseTopK, TiesBreakToLowestIndex) {
  Workspace ws;
  Matrix q{{1, 1}};
  Matrix key{{1, 0}, {0, 1}, {2, -1}, {0.5, 0.5}, {1, 0}};
  // Scores 1,1,1,1,1: all tied.
  for (TileConfig cfg : {TileConfig{1, 1, 1}, TileConfig{1, 2, 1}, TileConfig{}}) {
    auto r = rowwise_topk(q, key, 3, cfg, ws);
    EXPECT_EQ(r.indices, (IndexMatrix{{0, 1, 2}}));
  }
}

TEST(RowwiseTopK, Errors) {
  Workspace ws;
  EXPECT_THROW(rowwise_topk(Matrix(2, 3), Matrix(4, 3), 5, TileConfig{}, ws), ParameterError);
  EXPECT_THROW(rowwise_topk(Matrix(2, 3), Matrix(4, 3), 0, TileConfig{}, ws), ParameterError);
  EXPECT_THROW(rowwise_topk(Matrix(2, 3), Matrix(4, 2), 1, TileConfig{}, ws), ShapeError);
  EXPECT_THROW(rowwise_topk(Matrix(2, 3), Matrix(4, 3), 1, TileConfig{0, 1, 1}, ws),
               ParameterError);
}

TEST(RowwiseTopK, OracleEquivalenceAcrossConfigs) {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(150), m = 1 + rng.below(150), d = 1 + rng.below(32);
    const std::size_t k = 1 + rng.below(m);
    Matrix q = random_normal(n, d, rng), key = random_normal(m, d, rng);
    for (std::size_t qt : {1u, 7u, 64u})
      for (std::size_t kt : {1u, 13u, 1024u})
        for (std::size_t threads : {1u, 4u}) {
          Workspace ws;
          expect_matches_oracle(q, key, k, rowwise_topk(q, key, k, TileConfig{qt, kt, threads}, ws));
        }
  }
}

TEST(RowwiseTopK, FloatMatchesOracle) {
  Rng rng(8);
  MatrixF q = random_normal<float>(40, 10, rng), key = random_normal<float>(70, 10, rng);
  Workspace ws;
  expect_matches_oracle(q, key, 10, rowwise_topk(q, key, 10, TileConfig{16, 32, 2}, ws));
}

TEST(RowwiseTopK, DenseVariantIsIdentical) {
  Rng rng(77);
  Matrix q = random_normal(100, 10, rng), key = random_normal(100, 10, rng);
  Workspace a, b;
  auto tiled = rowwise_topk(q, key, 10, TileConfig{}, a);
  auto dense = rowwise_topk_dense(q, key, 10, b);
  EXPECT_EQ(tiled.indices, dense.indices);
  EXPECT_EQ(tiled.values, dense.values);
  // Dense holds the full 100 x 100 score matrix; tiled never does.
  EXPECT_GE(b.peak_bytes(), 100u * 100u * sizeof(double));
}

TEST(RowwiseTopK, WorkspaceReleasedAndSubquadratic) {
  Rng rng(3);
  const std::size_t n = 4096;
  Matrix q = random_normal(n, 10, rng), key = random_normal(n, 10, rng);
  Workspace ws;
  auto base = ws.live_bytes();
  auto r = rowwise_topk(q, key, 10, TileConfig{}, ws);
  EXPECT_EQ(ws.live_bytes(), base);
  EXPECT_GT(ws.peak_bytes(), n * 10 * 16);
  EXPECT_LT(ws.peak_bytes(), n * n * sizeof(double) / 10);
}

TEST(RowwiseTopK, QueryPermutationPermutesRows) {
  Rng rng(31);
  Matrix q = random_normal(50, 6, rng), key = random_normal(80, 6, rng);
  const auto perm = oracle::random_permutation(50, rng);
  Matrix pq(50, 6);
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t t = 0; t < 6; ++t) pq(i, t) = q(perm[i], t);
  Workspace ws;
  auto a = rowwise_topk(q, key, 7, TileConfig{8, 16, 1}, ws);
  auto b = rowwise_topk(pq, key, 7, TileConfig{8, 16, 1}, ws);
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_EQ(b.indices(i, j), a.indices(perm[i], j));
      EXPECT_EQ(b.values(i, j), a.values(perm[i], j));
    }
}

TEST(RowwiseTopK, KeyPermutationMapsIndicesThroughInverse) {
  Rng rng(32);
  Matrix q = random_normal(30, 5, rng), key = random_normal(60, 5, rng);
  const auto perm = oracle::random_permutation(60, rng);  // new row j = old row perm[j]
  std::vector<std::int64_t> inverse(60);
  for (std::size_t j = 0; j < 60; ++j) inverse[perm[j]] = static_cast<std::int64_t>(j);
  Matrix pk(60, 5);
  for (std::size_t j = 0; j < 60; ++j)
    for (std::size_t t = 0; t < 5; ++t) pk(j, t) = key(perm[j], t);
  Workspace ws;
  auto a = rowwise_topk(q, key, 6, TileConfig{}, ws);
  auto b = rowwise_topk(q, pk, 6, TileConfig{}, ws);
  for (std::size_t i = 0; i < 30; ++i) {
    // Continuous random inputs: no exact ties in any row.
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(b.indices(i, j), inverse[a.indices(i, j)]);
  }
}

TEST(GatherRows, Examples) {
  Matrix src{{10}, {20}, {30}};
  EXPECT_EQ(gather_rows(src, IndexMatrix{{2, 0}}), (Matrix{{30}, {10}}));
  EXPECT_EQ(gather_rows(src, IndexMatrix{{0, 0}, {0, 0}}), (Matrix{{10}, {10}, {10}, {10}}));
  EXPECT_THROW(gather_rows(src, IndexMatrix{{3}}), ValidationError);
}

TEST(GatherRows, MatchesNaiveLoop) {
  Rng rng(6);
  Matrix src = random_normal(20, 4, rng);
  IndexMatrix idx(7, 3);
  for (std::size_t i = 0; i < idx.size(); ++i) idx.data()[i] = static_cast<std::int64_t>(rng.below(20));
  Matrix out = gather_rows(src, idx);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(out(i * 3 + j, t), src(idx(i, j), t));
}

TEST(TopKBackward, ZeroUpstreamGivesZero) {
  Rng rng(1);
  Matrix q = random_normal(5, 3, rng), key = random_normal(8, 3, rng);
  Workspace ws;
  auto r = rowwise_topk(q, key, 3, TileConfig{}, ws);
  auto g = topk_backward(q, key, r, Matrix(5, 3));
  EXPECT_EQ(g.grad_q, Matrix(5, 3));
  EXPECT_EQ(g.grad_key, Matrix(8, 3));
}

TEST(TopKBackward, ProductRule) {
  Matrix q{{1, 2}}, key{{3, 4}};
  Workspace ws;
  auto r = rowwise_topk(q, key, 1, TileConfig{}, ws);
  auto g = topk_backward(q, key, r, Matrix{{1}});
  EXPECT_EQ(g.grad_q, (Matrix{{3, 4}}));
  EXPECT_EQ(g.grad_key, (Matrix{{1, 2}}));
}

TEST(TopKBackward, MatchesFiniteDifferences) {
  Rng rng(99);
  const std::size_t n = 6, m = 9, d = 4, k = 3;
  Matrix q = random_normal(n, d, rng), key = random_normal(m, d, rng);
  Matrix c = random_normal(n, k, rng);
  Workspace ws;
  const auto ref = rowwise_topk(q, key, k, TileConfig{}, ws);
  // f(q, key) = sum_ij c_ij * values_ij with the selection held fixed; the
  // finite-difference step must not change the selection.
  auto f = [&] {
    auto r = rowwise_topk(q, key, k, TileConfig{}, ws);
    EXPECT_EQ(r.indices, ref.indices);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) s += c(i, j) * r.values(i, j);
    return s;
  };
  auto g = topk_backward(q, key, ref, c);
  EXPECT_LT(oracle::rel_err(g.grad_q, oracle::finite_difference(q, f)), 1e-6);
  EXPECT_LT(oracle::rel_err(g.grad_key, oracle::finite_difference(key, f)), 1e-6);
}

TEST(TopKBackward, ShapeErrors) {
  Matrix q(2, 2), key(3, 2);
  Workspace ws;
  auto r = rowwise_topk(q, key, 2, TileConfig{}, ws);
  EXPECT_THROW(topk_backward(q, key, r, Matrix(2, 3)), ShapeError);
  EXPECT_THROW(topk_backward(Matrix(3, 2), key, r, Matrix(2, 2)), ShapeError);
}

}  // namespace
}  // namespace kmip
