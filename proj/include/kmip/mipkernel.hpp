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

#include "kmip/matrix.hpp"
#include "kmip/workspace.hpp"

namespace kmip {

// Per-row top-k keys by inner product.
// Rows of `values` are sorted descending with ties in ascending key index;
// `indices` holds the matching key rows.
template <typename T>
struct TopKResult {
  IndexMatrix indices;
  BasicMatrix<T> values;

  std::size_t rows() const noexcept { return indices.rows(); }
  std::size_t k() const noexcept { return indices.cols(); }
};

struct TileConfig {
  std::size_t query_tile = 64;
  std::size_t key_tile = 1024;
  std::size_t threads = 1;

  void validate() const;
};

// Exact row-wise top-k of q * key^T without materialising the score matrix.
// Scores are produced one query_tile x key_tile block at a time; each query
// row keeps a bounded heap of its k best (value, index) pairs. Output is
// independent of the tiling and of the number of threads.
//
// Workspace charged: the transposed key copy (M x d), one score tile per
// worker, the per-row heaps and the N x k result.
template <typename T>
TopKResult<T> rowwise_topk(const BasicMatrix<T>& q, const BasicMatrix<T>& key,
                           std::size_t k, const TileConfig& cfg, Workspace& ws);

// Same contract, but materialises the full N x M score matrix first. This is
// the dense baseline the tiled kernel is benchmarked against.
template <typename T>
TopKResult<T> rowwise_topk_dense(const BasicMatrix<T>& q,
                                 const BasicMatrix<T>& key, std::size_t k,
                                 Workspace& ws);

// out[i*k + j] = source[indices(i, j)], stored as an (N*k) x d matrix.
template <typename T>
BasicMatrix<T> gather_rows(const BasicMatrix<T>& source, const IndexMatrix& indices);

template <typename T>
struct TopKGrads {
  BasicMatrix<T> grad_q;
  BasicMatrix<T> grad_key;
};

// Gradient of the selected inner products only. The index set from the
// forward pass is reused as-is; cost is O(N * k * d).
template <typename T>
TopKGrads<T> topk_backward(const BasicMatrix<T>& q, const BasicMatrix<T>& key,
                           const TopKResult<T>& topk,
                           const BasicMatrix<T>& grad_values);

}  // namespace kmip
